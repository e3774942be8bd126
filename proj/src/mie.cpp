#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "wgm/constants.hpp"
#include "wgm/errors.hpp"
#include "wgm/modes.hpp"

namespace wgm {

namespace {

/**
 * Log-derivative of the Riccati-Bessel function psi_l(z) = z j_l(z):
 *   psi'/psi = j_{l-1}/j_l - l/z.
 * The ratio j_l/j_{l-1} is evaluated by the downward continued fraction
 *   j_l/j_{l-1} = 1 / (B_l - 1/(B_{l+1} - 1/(B_{l+2} - ...))),  B_k = (2k+1)/z,
 * with the modified Lentz algorithm (stable at all z, no overflow).
 */
double psi_log_derivative(int l, double z) {
    const double tiny = 1e-300;
    const double b0 = (2.0 * l + 1.0) / z;
    double f = (b0 == 0.0) ? tiny : b0;
    double c = f;
    double d = 0.0;
    for (int k = 1; k < 20000; ++k) {
        const double b = (2.0 * (l + k) + 1.0) / z;
        d = b - d;           // b + a*d_prev with a = -1
        if (d == 0.0) d = tiny;
        c = b - 1.0 / c;
        if (c == 0.0) c = tiny;
        d = 1.0 / d;
        const double delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-16) {
            return f - l / z;   // the fraction converges to j_{l-1}/j_l
        }
    }
    throw NumericError("psi_log_derivative: continued fraction did not converge");
}

/**
 * Log-derivative of chi_l(x) = -x y_l(x):
 *   chi'/chi = y_{l-1}/y_l - l/x,
 * with the y-ratio built by upward recurrence on rho_k = y_k/y_{k-1}
 * (the dominant solution direction below the turning point; ratios avoid
 * overflow for large l).
 */
double chi_log_derivative(int l, double x) {
    if (l == 0) {
        return -std::tan(x);   // chi_0(x) = cos x
    }
    double rho = 1.0 / x + std::tan(x);   // y_1/y_0
    for (int k = 1; k < l; ++k) {
        rho = (2.0 * k + 1.0) / x - 1.0 / rho;
    }
    return 1.0 / rho - l / x;
}

struct CharacteristicFn {
    int l;
    double n_rel;
    double p;   // boundary multiplier: N for TE, 1/N for TM

    double operator()(double x) const {
        return p * psi_log_derivative(l, n_rel * x) - chi_log_derivative(l, x);
    }
};

/// Brent root refinement on a bracketing interval [a, b] with f(a)*f(b) < 0.
double brent(const CharacteristicFn& fn, double a, double b, double fa, double fb,
             double rel_tol) {
    double c = a, fc = fa;
    double e = b - a, dd = e;
    for (int iter = 0; iter < 200; ++iter) {
        if (std::abs(fc) < std::abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol1 = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) +
                            0.5 * rel_tol * std::abs(b);
        const double xm = 0.5 * (c - b);
        if (std::abs(xm) <= tol1 || fb == 0.0) return b;
        if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
            const double s = fb / fa;
            double pq, qq;
            if (a == c) {
                pq = 2.0 * xm * s;
                qq = 1.0 - s;
            } else {
                const double q1 = fa / fc, r = fb / fc;
                pq = s * (2.0 * xm * q1 * (q1 - r) - (b - a) * (r - 1.0));
                qq = (q1 - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (pq > 0.0) qq = -qq;
            pq = std::abs(pq);
            if (2.0 * pq < std::min(3.0 * xm * qq - std::abs(tol1 * qq), std::abs(e * qq))) {
                e = dd;
                dd = pq / qq;
            } else {
                dd = xm;
                e = dd;
            }
        } else {
            dd = xm;
            e = dd;
        }
        a = b;
        fa = fb;
        b += (std::abs(dd) > tol1) ? dd : (xm > 0 ? tol1 : -tol1);
        fb = fn(b);
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a; fc = fa;
            e = b - a; dd = e;
        }
    }
    throw NumericError("brent: did not converge");
}

/// Root of the characteristic equation in size parameter x at fixed index.
/// Scans around the asymptotic estimate for a descending sign change (roots
/// descend; poles of the psi term jump upward) and refines with Brent.
double characteristic_root(int q, int l, Polarization pol, double n_rel) {
    const double nu = l + 0.5;
    const double x_est = detail::asymptotic_scaled_size(nu, n_rel, pol, q) / n_rel;
    const CharacteristicFn fn{l, n_rel, pol == Polarization::TE ? n_rel : 1.0 / n_rel};

    const double half = 0.6 / n_rel;
    const int npts = 49;
    double best_lo = 0.0, best_hi = 0.0, best_flo = 0.0, best_fhi = 0.0;
    double best_dist = 1e300;
    double x_prev = x_est - half;
    double f_prev = fn(x_prev);
    for (int i = 1; i < npts; ++i) {
        const double x = x_est - half + 2.0 * half * i / (npts - 1);
        const double fx = fn(x);
        if (f_prev > 0.0 && fx < 0.0) {
            const double mid = 0.5 * (x_prev + x);
            if (std::abs(mid - x_est) < best_dist) {
                best_dist = std::abs(mid - x_est);
                best_lo = x_prev; best_hi = x;
                best_flo = f_prev; best_fhi = fx;
            }
        }
        x_prev = x;
        f_prev = fx;
    }
    if (best_dist == 1e300) {
        std::ostringstream os;
        os << "exact_mie_root: no descending sign change near x in ["
           << x_est - half << ", " << x_est + half << "] for q=" << q << " l=" << l
           << (pol == Polarization::TE ? " TE" : " TM");
        throw NumericError(os.str());
    }
    return brent(fn, best_lo, best_hi, best_flo, best_fhi, 1e-13);
}

}  // namespace

double exact_mie_root(const SpheroidGeometry& geometry, const OpticalMaterial& material,
                      int q, int l, Polarization polarization) {
    validate_geometry(geometry);
    if (geometry.ellipticity != 0.0) {
        throw DomainError("exact_mie_root: requires a perfect sphere (ellipticity = 0)");
    }
    if (l < 1 || l > kMaxAngularLExact) {
        throw DomainError("exact_mie_root: l must be in [1, 2000]");
    }
    if (q < 1 || q > kMaxRadialOrder) {
        throw DomainError("exact_mie_root: q must be in [1, 10]");
    }
    const double a = geometry.equatorial_radius_um;

    double lam = 0.8;
    double f = 0.0;
    for (int it = 0; it < 16; ++it) {
        const double n = refractive_index(material, lam);
        const double x = characteristic_root(q, l, polarization, n);
        f = kSpeedOfLightThzUm * x / (2.0 * kPi * a);
        const double lam_new =
            std::clamp(kSpeedOfLightThzUm / f, kMinWavelengthUm, kMaxWavelengthUm);
        const bool converged = std::abs(lam_new - lam) <= 1e-12 * lam;
        lam = lam_new;
        if (converged) {
            const double lam_true = kSpeedOfLightThzUm / f;
            if (lam_true < kMinWavelengthUm || lam_true > kMaxWavelengthUm) {
                std::ostringstream os;
                os << "exact_mie_root: mode at " << f
                   << " THz lies outside the supported dispersion band";
                throw DomainError(os.str());
            }
            return f;
        }
    }
    throw NumericError("exact_mie_root: dispersion fixed point did not converge");
}

}  // namespace wgm
