#include "qvi/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qvi {

void RegularizationParams::check() const
{
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
    if (g_smoothing < 0) throw std::invalid_argument("g_smoothing must be non-negative");
}

namespace {

// quintic smoothstep and its derivative
double smoothstep(double r) { return r * r * r * (10.0 + r * (-15.0 + 6.0 * r)); }
double smoothstep_prime(double r) { return 30.0 * r * r * (1.0 - r) * (1.0 - r); }

// exponent E(s) with k = e^{E}, and dE/ds
double exponent(double s, double eps)
{
    if (s <= 0.0) return 0.0;
    if (s >= eps) return s / eps;
    const double r = s / eps;
    return r * smoothstep(r);
}

double exponent_prime(double s, double eps)
{
    if (s <= 0.0) return 0.0;
    if (s >= eps) return 1.0 / eps;
    const double r = s / eps;
    return (smoothstep(r) + r * smoothstep_prime(r)) / eps;
}

double adaptive_simpson(double a, double b, double fa, double fm, double fb, double whole, double eps,
                        double tol, int depth)
{
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = penalty_k(lm, eps);
    const double frm = penalty_k(rm, eps);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double diff = left + right - whole;
    if (depth <= 0 || std::fabs(diff) <= 15.0 * tol) {
        return left + right + diff / 15.0;
    }
    return adaptive_simpson(a, m, fa, flm, fm, left, eps, 0.5 * tol, depth - 1) +
           adaptive_simpson(m, b, fm, frm, fb, right, eps, 0.5 * tol, depth - 1);
}

double integrate_k(double a, double b, double eps)
{
    if (b <= a) return 0.0;
    const double fa = penalty_k(a, eps);
    const double fb = penalty_k(b, eps);
    const double fm = penalty_k(0.5 * (a + b), eps);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(a, b, fa, fm, fb, whole, eps, 1e-14 * std::max(1.0, std::fabs(whole)), 40);
}

}  // namespace

double penalty_k(double s, double eps)
{
    return std::exp(std::min(exponent(s, eps), kPenaltyExponentCap));
}

double penalty_k_prime(double s, double eps)
{
    const double e = exponent(s, eps);
    if (e >= kPenaltyExponentCap) return 0.0;
    return std::exp(e) * exponent_prime(s, eps);
}

bool penalty_clamped(double s, double eps)
{
    return exponent(s, eps) > kPenaltyExponentCap;
}

double penalty_K(double s, double eps)
{
    if (s <= 0.0) return s;
    // blend part by quadrature, exponential part in closed form
    const double blend_end = std::min(s, eps);
    double total = integrate_k(0.0, blend_end, eps);
    if (s > eps) {
        const double cap_s = kPenaltyExponentCap * eps;
        const double upper = std::min(s, cap_s);
        total += eps * (std::exp(upper / eps) - std::exp(1.0));
        if (s > cap_s) total += std::exp(kPenaltyExponentCap) * (s - cap_s);
    }
    return total;
}

namespace {

// average along one index direction of a (rows x cols) row-major block
void box_pass(std::vector<double>& v, int rows, int cols, bool along_cols, int radius)
{
    std::vector<double> out(v.size());
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            double sum = 0.0;
            int count = 0;
            for (int k = -radius; k <= radius; ++k) {
                const int rr = along_cols ? r : r + k;
                const int cc = along_cols ? c + k : c;
                if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
                sum += v[static_cast<std::size_t>(rr) * cols + cc];
                ++count;
            }
            out[static_cast<std::size_t>(r) * cols + c] = sum / count;
        }
    }
    v.swap(out);
}

}  // namespace

FaceField smooth_constraint(const FaceField& g_values, const RegularizationParams& params, double lambda_floor)
{
    if (params.g_smoothing <= 1) return g_values;
    const int radius = params.g_smoothing / 2;
    FaceField out = g_values;
    const Grid& g = g_values.grid;
    for (int a = 0; a < g.dim; ++a) {
        int cols = 0;
        int rows = 0;
        if (g.dim == 1) {
            cols = static_cast<int>(g.face_count(0));
            rows = 1;
        } else {
            cols = a == 0 ? g.n[0] - 1 : g.n[0];
            rows = a == 0 ? g.n[1] : g.n[1] - 1;
        }
        box_pass(out[a], rows, cols, true, radius);
        if (g.dim == 2) box_pass(out[a], rows, cols, false, radius);
        for (double& v : out[a]) v = std::max(v, lambda_floor);
    }
    return out;
}

}  // namespace qvi
