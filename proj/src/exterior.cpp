#include "nal/exterior.hpp"

namespace nal {

Dense exp_two_form(const std::vector<TwoFormEntry>& omega, int n) {
    std::size_t size = std::size_t(1) << n;
    Dense result(size, 0.0), power(size, 0.0), next(size, 0.0);
    result[0] = 1.0;
    power[0] = 1.0;
    for (int k = 1; 2 * k <= n; ++k) {
        std::fill(next.begin(), next.end(), 0.0);
        bool any = false;
        for (Mask m = 0; m < size; ++m) {
            if (power[m] == 0.0) continue;
            for (const auto& e : omega) {
                Mask b = (Mask(1) << e.i) | (Mask(1) << e.j);
                if (m & b) continue;
                int s = wedge_sign(b, m);
                next[m | b] += static_cast<double>(s) * e.v * power[m];
                any = true;
            }
        }
        if (!any) break;
        double inv = 1.0 / k;
        for (Mask m = 0; m < size; ++m) {
            power[m] = next[m] * inv;
            result[m] += power[m];
        }
    }
    return result;
}

namespace {

// Parlett-Reid tridiagonalization; a is overwritten.
std::complex<double> pfaffian_ltl(std::vector<std::complex<double>> a, int n) {
    auto at = [&](int i, int j) -> std::complex<double>& { return a[i * n + j]; };
    std::complex<double> pf = 1.0;
    for (int k = 0; k + 1 < n; k += 2) {
        int kp = k + 1;
        double best = std::abs(at(k + 1, k));
        for (int i = k + 2; i < n; ++i)
            if (std::abs(at(i, k)) > best) {
                best = std::abs(at(i, k));
                kp = i;
            }
        if (kp != k + 1) {
            for (int j = k; j < n; ++j) std::swap(at(k + 1, j), at(kp, j));
            for (int i = k; i < n; ++i) std::swap(at(i, k + 1), at(i, kp));
            pf = -pf;
        }
        if (at(k + 1, k) == 0.0) return 0.0;
        std::complex<double> piv = at(k, k + 1);
        pf *= piv;
        if (k + 2 < n) {
            std::vector<std::complex<double>> tau(n), col(n);
            for (int j = k + 2; j < n; ++j) {
                tau[j] = at(k, j) / piv;
                col[j] = at(j, k + 1);
            }
            for (int i = k + 2; i < n; ++i)
                for (int j = k + 2; j < n; ++j) at(i, j) += tau[i] * col[j] - col[i] * tau[j];
        }
    }
    return pf;
}

}  // namespace

std::complex<double> pfaffian(const std::vector<std::complex<double>>& a, int size) {
    if (size == 0) return 1.0;
    if (size % 2) return 0.0;
    if (size == 2) return a[1];
    if (size == 4) return a[1] * a[11] - a[2] * a[7] + a[3] * a[6];
    return pfaffian_ltl(a, size);
}

std::complex<double> exp_component(const std::vector<std::complex<double>>& omega_full, int n, Mask J) {
    int idx[32];
    int k = 0;
    for (int i = 0; i < n; ++i)
        if (J & (Mask(1) << i)) idx[k++] = i;
    if (k % 2) return 0.0;
    std::vector<std::complex<double>> sub(k * k);
    for (int p = 0; p < k; ++p)
        for (int q = 0; q < k; ++q) sub[p * k + q] = omega_full[idx[p] * n + idx[q]];
    return pfaffian(sub, k);
}

}  // namespace nal
