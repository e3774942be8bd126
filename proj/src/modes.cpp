#include "wgm/modes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "wgm/constants.hpp"
#include "wgm/errors.hpp"

namespace wgm {

namespace {

constexpr std::array<double, 10> kAiryZeros = {
    2.33810741045976704, 4.08794944413097062, 5.52055982809555106,
    6.78670809007175900, 7.94413358712085312, 9.02265085334098038,
    10.0401743415580859, 11.0085243037332629, 11.9360155632362625,
    12.8287767528657572};

constexpr double kCbrt2 = 1.2599210498948731648;       // 2^(1/3)
constexpr double kInvCbrt2 = 0.79370052598409973738;   // 2^(-1/3)
constexpr double kInvCbrt4 = 0.62996052494743658238;   // 2^(-2/3)

double polarization_term(double n_rel, Polarization pol) {
    return pol == Polarization::TE ? n_rel : 1.0 / n_rel;
}

void check_mode_id(const ModeId& mode) {
    if (mode.radial_order_q < 1 || mode.radial_order_q > kMaxRadialOrder) {
        throw DomainError("mode: radial order q must be in [1, 10]");
    }
    if (mode.angular_l < kMinAngularL) {
        std::ostringstream os;
        os << "mode: angular order l = " << mode.angular_l
           << " below asymptotic validity floor " << kMinAngularL;
        throw DomainError(os.str());
    }
    if (std::abs(mode.azimuthal_m) > mode.angular_l) {
        throw DomainError("mode: |m| must be <= l");
    }
}

/// Quadrupole ellipticity factor (l^2 - m^2)/(l (l+1)); zero at |m| = l.
double ellipticity_shape_factor(int l, int m) {
    const double ld = static_cast<double>(l);
    const double md = static_cast<double>(m);
    return (ld * ld - md * md) / (ld * (ld + 1.0));
}

}  // namespace

double airy_zero(int q) {
    if (q < 1 || q > kMaxRadialOrder) {
        throw DomainError("airy_zero: q must be in [1, 10]");
    }
    return kAiryZeros[static_cast<std::size_t>(q - 1)];
}

namespace detail {

double asymptotic_scaled_size(double nu, double n_rel, Polarization polarization, int q) {
    const double aq = airy_zero(q);
    const double p = polarization_term(n_rel, polarization);
    const double n2 = n_rel * n_rel;
    const double m1 = n2 - 1.0;
    const double sm1 = std::sqrt(m1);
    const double nu13 = std::cbrt(nu);

    const double t1 = nu;
    const double t2 = kInvCbrt2 * aq * nu13;                  // 2^(-1/3) a_q nu^(1/3)
    const double t3 = -p / sm1;
    const double t4 = 0.3 * kInvCbrt4 * aq * aq / nu13;       // (3/10) 2^(-2/3) a_q^2
    const double t5 = -kInvCbrt2 * p * (n2 - 2.0 * p * p / 3.0) / (m1 * sm1) * aq /
                      (nu13 * nu13);
    // nu^(-1) and nu^(-4/3) terms, derived by extending the uniform-Airy /
    // Debye matching two more orders (for TE the nu^(-1) coefficient reduces
    // to the classical (10 - a_q^3)/700 Bessel-zero value).
    const double aq3 = aq * aq * aq;
    const double p2 = p * p;
    const double c5 = (-n2 * n2 * aq3 + 10.0 * n2 * n2 - 350.0 * n2 * n_rel * p +
                       700.0 * n2 * p2 + 2.0 * n2 * aq3 - 20.0 * n2 - 350.0 * p2 * p2 -
                       aq3 + 10.0) /
                      (700.0 * m1 * m1);
    const double t6 = c5 / nu;
    const double c6 = -kCbrt2 * p * aq * aq *
                      (3.0 * n2 * n2 - 12.0 * n2 * p2 + 12.0 * n2 + 8.0 * p2 * p2 -
                       8.0 * p2) /
                      (20.0 * m1 * m1 * sm1);
    const double t7 = c6 / (nu13 * nu);
    const double az = -aq;  // the (negative) Airy zero itself
    const double az3 = az * az * az;
    const double n4 = n2 * n2;
    const double c7 = -az *
                      (479.0 * n4 * n2 * az3 - 40.0 * n4 * n2 - 63000.0 * n4 * n_rel * p +
                       126000.0 * n4 * p2 - 1437.0 * n4 * az3 + 120.0 * n4 +
                       126000.0 * n2 * n_rel * p2 * p - 189000.0 * n2 * n_rel * p -
                       399000.0 * n2 * p2 * p2 + 378000.0 * n2 * p2 + 1437.0 * n2 * az3 -
                       120.0 * n2 + 196000.0 * p2 * p2 * p2 - 189000.0 * p2 * p2 -
                       479.0 * az3 + 40.0) /
                      (126000.0 * m1 * m1 * m1 * kCbrt2);
    const double t8 = c7 / (nu13 * nu13 * nu);
    return t1 + t2 + t3 + t4 + t5 + t6 + t7 + t8;
}

}  // namespace detail

namespace {

/// Sphere resonance frequency (no ellipticity) at a fixed refractive index.
double sphere_frequency_fixed_n(double radius_um, double n_rel, int q, int l,
                                Polarization pol) {
    const double nu = l + 0.5;
    const double scaled = detail::asymptotic_scaled_size(nu, n_rel, pol, q);
    const double x = scaled / n_rel;
    return kSpeedOfLightThzUm * x / (2.0 * kPi * radius_um);
}

struct SelfConsistent {
    double frequency_thz;
    double wavelength_um;
};

/// Fixed-point iteration of n(lambda) <-> f for an arbitrary per-lambda
/// frequency model.  Clamps intermediate wavelengths into the supported band;
/// a converged value stuck at the clamp boundary is a domain error.
template <typename FreqModel>
SelfConsistent self_consistent_frequency(double seed_wavelength_um, FreqModel&& model,
                                         int max_iter, double rel_tol) {
    double lam = std::clamp(seed_wavelength_um, kMinWavelengthUm, kMaxWavelengthUm);
    double f = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        f = model(lam);
        if (!(f > 0.0) || !std::isfinite(f)) {
            throw NumericError("mode frequency iteration produced a non-positive value");
        }
        const double lam_new =
            std::clamp(kSpeedOfLightThzUm / f, kMinWavelengthUm, kMaxWavelengthUm);
        const bool converged = std::abs(lam_new - lam) <= rel_tol * lam;
        lam = lam_new;
        if (converged) {
            const double lam_unclamped = kSpeedOfLightThzUm / f;
            if (lam_unclamped < kMinWavelengthUm || lam_unclamped > kMaxWavelengthUm) {
                std::ostringstream os;
                os << "mode at " << f << " THz (lambda = " << lam_unclamped
                   << " um) lies outside the supported dispersion band";
                throw DomainError(os.str());
            }
            return {f, lam};
        }
    }
    throw NumericError("mode frequency fixed point did not converge");
}

}  // namespace

double mode_frequency(const SpheroidGeometry& geometry, const OpticalMaterial& material,
                      const ModeId& mode, double seed_wavelength_um) {
    validate_geometry(geometry);
    check_mode_id(mode);
    const double a = geometry.equatorial_radius_um;
    const double eps = geometry.ellipticity;
    const double shape = ellipticity_shape_factor(mode.angular_l, mode.azimuthal_m);

    auto model = [&](double lam) {
        const double n = refractive_index(material, lam);
        const double f_sph =
            sphere_frequency_fixed_n(a, n, mode.radial_order_q, mode.angular_l,
                                     mode.polarization);
        if (eps == 0.0 || shape == 0.0) {
            return f_sph;
        }
        const double f_ref =
            mode.polarization == Polarization::TE
                ? f_sph
                : sphere_frequency_fixed_n(a, n, mode.radial_order_q, mode.angular_l,
                                           Polarization::TE);
        return f_sph - f_ref * 0.5 * eps * shape;
    };
    return self_consistent_frequency(seed_wavelength_um, model, 8, 1e-10)
        .frequency_thz;
}

int nearest_angular_order(const SpheroidGeometry& geometry, const OpticalMaterial& material,
                          double target_thz, int q, Polarization polarization) {
    if (!(target_thz > 0.0)) {
        throw DomainError("nearest_angular_order: target frequency must be > 0");
    }
    const double lam = kSpeedOfLightThzUm / target_thz;
    const double n = refractive_index(material, lam);
    const double x_target = 2.0 * kPi * geometry.equatorial_radius_um / lam;
    const double scaled_target = n * x_target;
    // invert the expansion by fixed point on nu
    double nu = scaled_target;
    for (int it = 0; it < 20; ++it) {
        const double corr = detail::asymptotic_scaled_size(nu, n, polarization, q) - nu;
        const double nu_new = std::max(scaled_target - corr, 1.0);
        if (std::abs(nu_new - nu) < 1e-9 * nu) {
            nu = nu_new;
            break;
        }
        nu = nu_new;
    }
    int l_guess = std::max(static_cast<int>(std::lround(nu - 0.5)), kMinAngularL + 2);
    // local scan for the closest fundamental mode
    int best_l = l_guess;
    double best_err = 1e300;
    for (int l = std::max(kMinAngularL, l_guess - 3); l <= l_guess + 3; ++l) {
        ModeId id{q, l, l, polarization};
        const double f = mode_frequency(geometry, material, id, lam);
        const double err = std::abs(f - target_thz);
        if (err < best_err) {
            best_err = err;
            best_l = l;
        }
    }
    return best_l;
}

double free_spectral_range(const SpheroidGeometry& geometry, const OpticalMaterial& material,
                           double wavelength_um) {
    const double f_target = kSpeedOfLightThzUm / wavelength_um;
    const int l = nearest_angular_order(geometry, material, f_target);
    const ModeId lo{1, l, l, Polarization::TE};
    const ModeId hi{1, l + 1, l + 1, Polarization::TE};
    return (mode_frequency(geometry, material, hi, wavelength_um) -
            mode_frequency(geometry, material, lo, wavelength_um)) * 1e3;
}

double polarization_splitting(const SpheroidGeometry& geometry,
                              const OpticalMaterial& material, double wavelength_um) {
    const double f_target = kSpeedOfLightThzUm / wavelength_um;
    const int l = nearest_angular_order(geometry, material, f_target);
    const ModeId te{1, l, l, Polarization::TE};
    const ModeId tm{1, l, l, Polarization::TM};
    return (mode_frequency(geometry, material, tm, wavelength_um) -
            mode_frequency(geometry, material, te, wavelength_um)) * 1e3;
}

double ellipticity_splitting(const SpheroidGeometry& geometry,
                             const OpticalMaterial& material, int l, int m,
                             double wavelength_um) {
    const int mu = std::abs(m);
    if (mu < 1 || mu > l) {
        throw DomainError("ellipticity_splitting: need 1 <= |m| <= l");
    }
    const ModeId upper{1, l, mu, Polarization::TE};
    const ModeId lower{1, l, mu - 1, Polarization::TE};
    return (mode_frequency(geometry, material, upper, wavelength_um) -
            mode_frequency(geometry, material, lower, wavelength_um)) * 1e3;
}

std::vector<ModeLine> spectrum_window(const SpheroidGeometry& geometry,
                                      const OpticalMaterial& material, double f_lo_thz,
                                      double f_hi_thz, const ModeFilter& filter) {
    validate_geometry(geometry);
    if (!(f_lo_thz > 0.0) || !(f_lo_thz < f_hi_thz)) {
        throw DomainError("spectrum_window: need 0 < f_lo < f_hi");
    }
    const double f_mid = 0.5 * (f_lo_thz + f_hi_thz);
    const double lam_mid =
        std::clamp(kSpeedOfLightThzUm / f_mid, kMinWavelengthUm, kMaxWavelengthUm);
    const double n_mid = refractive_index(material, lam_mid);
    const double fsr_est_thz = kSpeedOfLightThzUm /
                               (2.0 * kPi * geometry.equatorial_radius_um * n_mid);
    if (f_hi_thz - f_lo_thz > 5.0 * fsr_est_thz * 1.05) {
        std::ostringstream os;
        os << "spectrum_window: window of " << (f_hi_thz - f_lo_thz)
           << " THz exceeds the 5-FSR enumeration bound (" << 5.0 * fsr_est_thz << " THz)";
        throw DomainError(os.str());
    }
    if (filter.q_max < 1 || filter.q_max > kMaxRadialOrder) {
        throw DomainError("spectrum_window: q_max out of [1, 10]");
    }
    if (filter.delta_m_max < 0) {
        throw DomainError("spectrum_window: delta_m_max must be >= 0");
    }

    std::vector<Polarization> pols;
    if (filter.include_te) pols.push_back(Polarization::TE);
    if (filter.include_tm) pols.push_back(Polarization::TM);

    const int span_l = static_cast<int>(
        std::ceil(0.5 * (f_hi_thz - f_lo_thz) / fsr_est_thz)) + 4 +
        static_cast<int>(std::ceil(std::abs(geometry.ellipticity) *
                                   (filter.delta_m_max + 1)));

    std::vector<ModeLine> lines;
    for (int q = 1; q <= filter.q_max; ++q) {
        for (const auto pol : pols) {
            const int l_center = nearest_angular_order(geometry, material, f_mid, q, pol);
            for (int dm = 0; dm <= filter.delta_m_max; ++dm) {
                for (int l = std::max(kMinAngularL, l_center - span_l);
                     l <= l_center + span_l; ++l) {
                    if (l - dm < 0) continue;
                    ModeId id{q, l, l - dm, pol};
                    double f;
                    try {
                        f = mode_frequency(geometry, material, id, lam_mid);
                    } catch (const DomainError&) {
                        continue;  // outside the dispersion band
                    }
                    if (f >= f_lo_thz && f <= f_hi_thz) {
                        lines.push_back(ModeLine{id, f, filter.loaded_q, filter.dip_depth});
                    }
                }
            }
        }
    }
    std::sort(lines.begin(), lines.end(), [](const ModeLine& u, const ModeLine& v) {
        if (u.frequency_thz != v.frequency_thz) return u.frequency_thz < v.frequency_thz;
        if (u.mode.radial_order_q != v.mode.radial_order_q)
            return u.mode.radial_order_q < v.mode.radial_order_q;
        if (u.mode.angular_l != v.mode.angular_l) return u.mode.angular_l < v.mode.angular_l;
        if (u.mode.azimuthal_m != v.mode.azimuthal_m)
            return u.mode.azimuthal_m < v.mode.azimuthal_m;
        return u.mode.polarization == Polarization::TE &&
               v.mode.polarization == Polarization::TM;
    });
    return lines;
}

}  // namespace wgm
