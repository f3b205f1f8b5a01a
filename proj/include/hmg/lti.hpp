#pragma once

// Rational transfer-function algebra, state-space realization, fixed-step RK4
// integration and the Laplace-domain limit theorems used by every other part
// of the library. Polynomials are stored in ascending powers of s.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hmg/error.hpp"

namespace hmg {

using Complex = std::complex<double>;

/// Leading coefficients below this fraction of the largest magnitude are dropped.
inline constexpr double kTrimRelTol = 1e-12;
/// A root counts as sitting at the origin below this magnitude.
inline constexpr double kOriginRootTol = 1e-9;
/// Numerator roots within this radius pair with an origin pole.
inline constexpr double kOriginPairTol = 1e-8;

class Polynomial {
public:
    Polynomial() : coeffs_{0.0} {}
    Polynomial(std::initializer_list<double> c) : Polynomial(std::vector<double>(c)) {}
    explicit Polynomial(std::vector<double> c) : coeffs_(std::move(c)) {
        if (coeffs_.empty()) {
            throw Error(ErrorKind::InvalidArgument, "polynomial needs at least one coefficient");
        }
        trim();
    }

    static Polynomial constant(double c) { return Polynomial({c}); }
    /// (s - root) expressed as a polynomial.
    static Polynomial monomial_root(double root) { return Polynomial({-root, 1.0}); }
    /// Result of arithmetic: only exactly-zero leading coefficients are dropped.
    /// Cancellation is handled where it can occur (poly_add), so legitimately
    /// small leading terms of wide-band polynomials survive.
    static Polynomial from_arithmetic(std::vector<double> c) {
        if (c.empty()) throw Error(ErrorKind::InvalidArgument, "polynomial needs at least one coefficient");
        while (c.size() > 1 && c.back() == 0.0) c.pop_back();
        Polynomial p;
        p.coeffs_ = std::move(c);
        return p;
    }

    std::size_t degree() const { return coeffs_.size() - 1; }
    double leading() const { return coeffs_.back(); }
    const std::vector<double>& coeffs() const { return coeffs_; }
    double operator[](std::size_t k) const { return k < coeffs_.size() ? coeffs_[k] : 0.0; }
    bool is_zero() const { return coeffs_.size() == 1 && coeffs_[0] == 0.0; }

    double max_abs() const {
        double m = 0.0;
        for (double c : coeffs_) m = std::max(m, std::abs(c));
        return m;
    }

    template <typename T>
    T eval(T s) const {
        T acc = T(coeffs_.back());
        for (std::size_t k = coeffs_.size() - 1; k-- > 0;) acc = acc * s + T(coeffs_[k]);
        return acc;
    }

    /// Sum of |c_k| |s|^k, the scale against which cancellation in eval() is judged.
    double eval_abs_scale(double abs_s) const {
        double acc = 0.0;
        for (std::size_t k = coeffs_.size(); k-- > 0;) acc = acc * abs_s + std::abs(coeffs_[k]);
        return acc;
    }

private:
    void trim() {
        const double scale = max_abs();
        if (scale == 0.0) {
            coeffs_.assign(1, 0.0);
            return;
        }
        while (coeffs_.size() > 1 && std::abs(coeffs_.back()) < kTrimRelTol * scale) coeffs_.pop_back();
    }

    std::vector<double> coeffs_;
};

inline Polynomial poly_mul(const Polynomial& a, const Polynomial& b) {
    const auto& x = a.coeffs();
    const auto& y = b.coeffs();
    std::vector<double> out(x.size() + y.size() - 1, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < y.size(); ++j) out[i + j] += x[i] * y[j];
    return Polynomial::from_arithmetic(std::move(out));
}

/// Leading terms that cancel to within kTrimRelTol of the operands are dropped.
inline Polynomial poly_add(const Polynomial& a, const Polynomial& b) {
    std::vector<double> out(std::max(a.coeffs().size(), b.coeffs().size()), 0.0);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = a[k] + b[k];
    while (out.size() > 1) {
        const std::size_t k = out.size() - 1;
        if (std::abs(out[k]) > kTrimRelTol * (std::abs(a[k]) + std::abs(b[k]))) break;
        out.pop_back();
    }
    return Polynomial::from_arithmetic(std::move(out));
}

inline Polynomial poly_scale(const Polynomial& a, double k) {
    std::vector<double> out = a.coeffs();
    for (double& c : out) c *= k;
    return Polynomial::from_arithmetic(std::move(out));
}

inline Polynomial poly_sub(const Polynomial& a, const Polynomial& b) { return poly_add(a, poly_scale(b, -1.0)); }

inline Polynomial operator*(const Polynomial& a, const Polynomial& b) { return poly_mul(a, b); }
inline Polynomial operator+(const Polynomial& a, const Polynomial& b) { return poly_add(a, b); }
inline Polynomial operator-(const Polynomial& a, const Polynomial& b) { return poly_sub(a, b); }
inline Polynomial operator*(double k, const Polynomial& a) { return poly_scale(a, k); }

struct PolyDivision {
    Polynomial quotient;
    Polynomial remainder;
};

/// Long division num = q * den + r with deg r < deg den.
inline PolyDivision poly_divide(const Polynomial& num, const Polynomial& den) {
    if (den.is_zero()) throw Error(ErrorKind::InvalidArgument, "division by the zero polynomial");
    std::vector<double> rem = num.coeffs();
    const auto& d = den.coeffs();
    const std::size_t dn = den.degree();
    if (num.degree() < dn) return {Polynomial::constant(0.0), num};
    std::vector<double> q(num.degree() - dn + 1, 0.0);
    for (std::size_t k = q.size(); k-- > 0;) {
        const double c = rem[k + dn] / d[dn];
        q[k] = c;
        for (std::size_t j = 0; j <= dn; ++j) rem[k + j] -= c * d[j];
        rem[k + dn] = 0.0;
    }
    rem.resize(std::max<std::size_t>(dn, 1));
    return {Polynomial::from_arithmetic(std::move(q)), Polynomial::from_arithmetic(std::move(rem))};
}

/// Roots as eigenvalues of the companion matrix.
inline std::vector<Complex> roots(const Polynomial& p) {
    const std::size_t n = p.degree();
    if (n == 0) return {};
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 1; i < n; ++i) comp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
    for (std::size_t j = 0; j < n; ++j) comp(0, static_cast<Eigen::Index>(j)) = -p[n - 1 - j] / p.leading();
    Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
    std::vector<Complex> out;
    out.reserve(n);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) out.push_back(es.eigenvalues()(i));
    return out;
}

/// num(s) / den(s), stored with a monic denominator.
class RationalTF {
public:
    RationalTF() : num_({0.0}), den_({1.0}) {}
    RationalTF(Polynomial num, Polynomial den) : num_(std::move(num)), den_(std::move(den)) {
        if (den_.is_zero()) throw Error(ErrorKind::InvalidArgument, "transfer function with zero denominator");
        const double lead = den_.leading();
        if (lead != 1.0) {
            num_ = poly_scale(num_, 1.0 / lead);
            den_ = poly_scale(den_, 1.0 / lead);
        }
    }

    static RationalTF gain(double k) { return RationalTF(Polynomial({k}), Polynomial({1.0})); }
    /// 1/s
    static RationalTF integrator() { return RationalTF(Polynomial({1.0}), Polynomial({0.0, 1.0})); }
    /// (b1 s + b0) / (a1 s + a0)
    static RationalTF first_order(double b1, double b0, double a1, double a0) {
        return RationalTF(Polynomial({b0, b1}), Polynomial({a0, a1}));
    }

    const Polynomial& num() const { return num_; }
    const Polynomial& den() const { return den_; }

    bool is_proper() const { return num_.is_zero() || num_.degree() <= den_.degree(); }
    bool is_strictly_proper() const { return num_.is_zero() || num_.degree() < den_.degree(); }

private:
    Polynomial num_;
    Polynomial den_;
};

inline bool poly_approx_equal(const Polynomial& a, const Polynomial& b, double tol) {
    const std::size_t n = std::max(a.coeffs().size(), b.coeffs().size());
    const double scale = std::max({a.max_abs(), b.max_abs(), 1e-300});
    for (std::size_t k = 0; k < n; ++k)
        if (std::abs(a[k] - b[k]) > tol * scale) return false;
    return true;
}

inline bool tf_approx_equal(const RationalTF& a, const RationalTF& b, double tol) {
    return poly_approx_equal(a.num(), b.num(), tol) && poly_approx_equal(a.den(), b.den(), tol);
}

inline RationalTF tf_series(const RationalTF& a, const RationalTF& b) {
    return RationalTF(a.num() * b.num(), a.den() * b.den());
}

inline RationalTF tf_scale(const RationalTF& a, double k) { return RationalTF(poly_scale(a.num(), k), a.den()); }

inline RationalTF tf_add(const RationalTF& a, const RationalTF& b) {
    if (poly_approx_equal(a.den(), b.den(), 1e-14)) return RationalTF(a.num() + b.num(), a.den());
    return RationalTF(a.num() * b.den() + b.num() * a.den(), a.den() * b.den());
}

inline RationalTF tf_sub(const RationalTF& a, const RationalTF& b) { return tf_add(a, tf_scale(b, -1.0)); }

inline RationalTF tf_reciprocal(const RationalTF& a) {
    if (a.num().is_zero()) throw Error(ErrorKind::InvalidArgument, "reciprocal of the zero transfer function");
    return RationalTF(a.den(), a.num());
}

/// Multiplies by s^k (k > 0) or divides by s^-k.
inline RationalTF tf_shift_s(const RationalTF& a, int k) {
    std::vector<double> pad(static_cast<std::size_t>(std::abs(k)), 0.0);
    auto shifted = [&](const Polynomial& p) {
        std::vector<double> c = pad;
        c.insert(c.end(), p.coeffs().begin(), p.coeffs().end());
        return Polynomial::from_arithmetic(std::move(c));
    };
    return k >= 0 ? RationalTF(shifted(a.num()), a.den()) : RationalTF(a.num(), shifted(a.den()));
}

inline Complex tf_eval(const RationalTF& f, Complex s) {
    const Complex d = f.den().eval(s);
    if (std::abs(d) < 1e-13 * f.den().eval_abs_scale(std::abs(s))) {
        throw Error(ErrorKind::EvalAtPole, "denominator vanishes at s = (" + std::to_string(s.real()) + ", " +
                                               std::to_string(s.imag()) + ")");
    }
    return f.num().eval(s) / d;
}

/// Single-input single-output realization dx/dt = A x + B u, y = C x + D u.
struct StateSpace {
    Eigen::MatrixXd A;
    Eigen::VectorXd B;
    Eigen::RowVectorXd C;
    double D = 0.0;

    Eigen::Index order() const { return A.rows(); }
    Eigen::VectorXd zero_state() const { return Eigen::VectorXd::Zero(order()); }
    double output(const Eigen::VectorXd& x, double u) const { return (order() ? C.dot(x) : 0.0) + D * u; }
};

/// Controllable canonical form.
inline StateSpace tf_to_statespace(const RationalTF& f) {
    if (!f.is_proper()) throw Error(ErrorKind::ImproperTF, "deg num > deg den");
    const std::size_t n = f.den().degree();
    const Eigen::Index ni = static_cast<Eigen::Index>(n);
    StateSpace ss;
    ss.A = Eigen::MatrixXd::Zero(ni, ni);
    ss.B = Eigen::VectorXd::Zero(ni);
    ss.C = Eigen::RowVectorXd::Zero(ni);
    const double bn = f.num()[n];  // den is monic
    ss.D = bn;
    if (n == 0) return ss;
    for (Eigen::Index i = 0; i + 1 < ni; ++i) ss.A(i, i + 1) = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
        ss.A(ni - 1, static_cast<Eigen::Index>(j)) = -f.den()[j];
        ss.C(static_cast<Eigen::Index>(j)) = f.num()[j] - f.den()[j] * bn;
    }
    ss.B(ni - 1) = 1.0;
    return ss;
}

/// Real block-diagonal (modal) realization from the partial-fraction
/// expansion. Far better conditioned than the companion form when the poles
/// span many decades; requires distinct poles.
inline StateSpace tf_to_modal_statespace(const RationalTF& f) {
    if (!f.is_proper()) throw Error(ErrorKind::ImproperTF, "deg num > deg den");
    const std::size_t n = f.den().degree();
    StateSpace ss;
    ss.D = f.num()[n];
    const Polynomial rem = poly_sub(f.num(), poly_scale(f.den(), ss.D));
    std::vector<double> dd(n == 0 ? 1 : n, 0.0);
    for (std::size_t k = 1; k <= n; ++k) dd[k - 1] = static_cast<double>(k) * f.den()[k];
    const Polynomial dden = Polynomial::from_arithmetic(std::move(dd));

    const std::vector<Complex> poles = roots(f.den());
    for (std::size_t i = 0; i < poles.size(); ++i)
        for (std::size_t j = i + 1; j < poles.size(); ++j)
            if (std::abs(poles[i] - poles[j]) < 1e-9 * std::max(1.0, std::abs(poles[i]))) {
                throw Error(ErrorKind::InvalidArgument, "modal realization needs distinct poles");
            }

    std::vector<double> a_diag;
    std::vector<std::pair<Complex, Complex>> blocks;  // (pole, residue) with imag(pole) > 0
    std::vector<std::pair<double, double>> reals;     // (pole, residue)
    for (Complex p : poles) {
        const Complex r = rem.eval(p) / dden.eval(p);
        if (std::abs(p.imag()) <= 1e-10 * std::max(1.0, std::abs(p))) reals.push_back({p.real(), r.real()});
        else if (p.imag() > 0.0) blocks.push_back({p, r});
    }
    const Eigen::Index order = static_cast<Eigen::Index>(reals.size() + 2 * blocks.size());
    if (static_cast<std::size_t>(order) != n) throw Error(ErrorKind::InvalidArgument, "unpaired complex pole");
    ss.A = Eigen::MatrixXd::Zero(order, order);
    ss.B = Eigen::VectorXd::Zero(order);
    ss.C = Eigen::RowVectorXd::Zero(order);
    Eigen::Index k = 0;
    for (auto [p, r] : reals) {
        ss.A(k, k) = p;
        ss.B(k) = 1.0;
        ss.C(k) = r;
        ++k;
    }
    // z' = p z + u with z = x1 + j x2, y = 2 Re(r z).
    for (auto [p, r] : blocks) {
        ss.A(k, k) = p.real();
        ss.A(k, k + 1) = -p.imag();
        ss.A(k + 1, k) = p.imag();
        ss.A(k + 1, k + 1) = p.real();
        ss.B(k) = 1.0;
        ss.C(k) = 2.0 * r.real();
        ss.C(k + 1) = -2.0 * r.imag();
        k += 2;
    }
    return ss;
}

/// C (sI - A)^-1 B + D
inline Complex ss_eval(const StateSpace& ss, Complex s) {
    if (ss.order() == 0) return ss.D;
    const Eigen::Index n = ss.order();
    Eigen::MatrixXcd m = s * Eigen::MatrixXcd::Identity(n, n) - ss.A.cast<Complex>();
    Eigen::VectorXcd x = m.partialPivLu().solve(ss.B.cast<Complex>());
    return (ss.C.cast<Complex>() * x)(0) + ss.D;
}

/// Classical RK4 advance with the input held over the step.
inline Eigen::VectorXd step_rk4(const StateSpace& ss, const Eigen::VectorXd& x, double u, double h) {
    if (!(h > 0.0)) throw Error(ErrorKind::InvalidArgument, "step must be positive");
    if (ss.order() == 0) return x;
    const Eigen::VectorXd bu = ss.B * u;
    const Eigen::VectorXd k1 = ss.A * x + bu;
    const Eigen::VectorXd k2 = ss.A * (x + 0.5 * h * k1) + bu;
    const Eigen::VectorXd k3 = ss.A * (x + 0.5 * h * k2) + bu;
    const Eigen::VectorXd k4 = ss.A * (x + h * k3) + bu;
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Samples y(k h), k = 0..steps, for a step of height `amplitude` applied at t = 0.
inline std::vector<double> step_response(const StateSpace& ss, double amplitude, double h, std::size_t steps) {
    Eigen::VectorXd x = ss.zero_state();
    std::vector<double> y;
    y.reserve(steps + 1);
    y.push_back(ss.output(x, amplitude));
    for (std::size_t k = 0; k < steps; ++k) {
        x = step_rk4(ss, x, amplitude, h);
        y.push_back(ss.output(x, amplitude));
    }
    return y;
}

inline std::vector<double> step_response(const RationalTF& f, double amplitude, double h, std::size_t steps) {
    return step_response(tf_to_statespace(f), amplitude, h, steps);
}

/// lim_{s->inf} s f(s), the initial slope of the unit-step response.
inline double ivt_rate_limit(const RationalTF& f) {
    if (!f.is_proper()) throw Error(ErrorKind::ImproperTF, "deg num > deg den");
    if (f.num().is_zero()) return 0.0;
    const std::size_t dn = f.num().degree();
    const std::size_t dd = f.den().degree();
    if (dn == dd) throw Error(ErrorKind::Unbounded, "s f(s) diverges: relative degree 0");
    if (dn + 1 == dd) return f.num().leading() / f.den().leading();
    return 0.0;
}

namespace detail {

inline std::size_t count_origin_roots(const std::vector<Complex>& rs, double tol) {
    return static_cast<std::size_t>(std::count_if(rs.begin(), rs.end(), [tol](Complex r) { return std::abs(r) < tol; }));
}

/// Number of exactly zero low-order coefficients. A multiple root at the
/// origin splits into a cluster of radius ~eps^(1/k) under root finding, so
/// exact factors of s are taken off before the roots are computed.
inline std::size_t exact_origin_order(const Polynomial& p) {
    std::size_t k = 0;
    while (k < p.degree() && p[k] == 0.0) ++k;
    return k;
}

inline Polynomial drop_low(const Polynomial& p, std::size_t k) {
    return Polynomial::from_arithmetic(std::vector<double>(p.coeffs().begin() + static_cast<long>(k), p.coeffs().end()));
}

/// Origin multiplicity: exact s^k factors plus near-origin roots of the rest.
inline std::size_t origin_order(const Polynomial& p, double tol) {
    const std::size_t k = exact_origin_order(p);
    return k + count_origin_roots(roots(drop_low(p, k)), tol);
}

}  // namespace detail

/// lim_{s->0} s f(s), valid only when every pole of s f(s) lies in the open
/// left half-plane once a single pole at the origin has been cancelled.
inline double fvt_limit(const RationalTF& f) {
    if (f.num().is_zero()) return 0.0;
    const std::size_t kd0 = detail::exact_origin_order(f.den());
    const auto den_roots = roots(detail::drop_low(f.den(), kd0));
    const std::size_t kd = kd0 + detail::count_origin_roots(den_roots, kOriginRootTol);
    const std::size_t kn = detail::origin_order(f.num(), kOriginPairTol);
    for (Complex r : den_roots) {
        if (std::abs(r) >= kOriginRootTol && r.real() >= 0.0) {
            throw Error(ErrorKind::FvtInvalid, "pole at (" + std::to_string(r.real()) + ", " +
                                                    std::to_string(r.imag()) + ") is not in the open left half-plane");
        }
    }
    // Origin multiplicity of s f(s): numerator zeros + 1 - denominator poles.
    const long multiplicity = static_cast<long>(kn) + 1 - static_cast<long>(kd);
    if (multiplicity < 0) throw Error(ErrorKind::FvtInvalid, "repeated pole at the origin");
    if (multiplicity > 0) return 0.0;
    return f.num()[kn] / f.den()[kd];
}

/// Removes a common s^k factor (near-zero low-order coefficients on both sides).
inline RationalTF cancel_origin(const RationalTF& f) {
    const std::size_t k = std::min(detail::origin_order(f.num(), kOriginPairTol), detail::origin_order(f.den(), kOriginRootTol));
    if (k == 0) return f;
    return RationalTF(detail::drop_low(f.num(), k), detail::drop_low(f.den(), k));
}

}  // namespace hmg
