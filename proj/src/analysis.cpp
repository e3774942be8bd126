#include "wgm/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "wgm/constants.hpp"
#include "wgm/tuning.hpp"

namespace wgm {

namespace {

double median(const Eigen::ArrayXd& v) {
    std::vector<double> tmp(v.data(), v.data() + v.size());
    const std::size_t mid = tmp.size() / 2;
    std::nth_element(tmp.begin(), tmp.begin() + mid, tmp.end());
    double hi = tmp[mid];
    if (tmp.size() % 2 == 0) {
        std::nth_element(tmp.begin(), tmp.begin() + mid - 1, tmp.end());
        return 0.5 * (hi + tmp[mid - 1]);
    }
    return hi;
}

void check_trace(const TransmissionTrace& trace) {
    if (trace.frequencies_thz.size() != trace.transmission.size() ||
        trace.frequencies_thz.size() < 3) {
        throw DomainError("trace: frequency/transmission arrays must match, size >= 3");
    }
}

struct LorentzianModel {
    // transmission = 1 - depth * h / ((f - c)^2 + h),  h = (gamma/2)^2
    double center_ghz;
    double gamma_ghz;
    double depth;
};

}  // namespace

std::vector<IndexRange> detect_dips(const TransmissionTrace& trace, double prominence) {
    check_trace(trace);
    if (!(prominence > 0.0 && prominence < 1.0)) {
        throw DomainError("detect_dips: prominence must be in (0, 1)");
    }
    const Eigen::ArrayXd& y = trace.transmission;
    const Eigen::Index n = y.size();
    const double baseline = median(y);
    if (!(baseline > 0.0)) {
        throw DomainError("detect_dips: non-positive baseline");
    }
    const double threshold = baseline * (1.0 - prominence);

    // cores: maximal runs strictly below the prominence threshold
    struct Core {
        Eigen::Index begin, end;
        double min_value;
    };
    std::vector<Core> cores;
    Eigen::Index i = 0;
    while (i < n) {
        if (y[i] < threshold) {
            Eigen::Index j = i;
            double mv = y[i];
            while (j + 1 < n && y[j + 1] < threshold) {
                ++j;
                mv = std::min(mv, y[j]);
            }
            cores.push_back({i, j + 1, mv});
            i = j + 1;
        } else {
            ++i;
        }
    }

    // expand each core to catch the dip wings (down to 10% of its depth),
    // never crossing the midpoint towards a neighboring core
    std::vector<IndexRange> windows;
    windows.reserve(cores.size());
    for (std::size_t k = 0; k < cores.size(); ++k) {
        const double wing_level = baseline - 0.1 * (baseline - cores[k].min_value);
        Eigen::Index lo = cores[k].begin;
        Eigen::Index hi = cores[k].end;  // half-open
        const Eigen::Index lo_lim =
            k == 0 ? 0 : (cores[k - 1].end + cores[k].begin) / 2;
        const Eigen::Index hi_lim =
            k + 1 == cores.size() ? n : (cores[k].end + cores[k + 1].begin) / 2;
        while (lo > lo_lim && y[lo - 1] < wing_level) --lo;
        while (hi < hi_lim && y[hi] < wing_level) ++hi;
        // pad to the minimum fit width
        while (hi - lo < 7 && (lo > lo_lim || hi < hi_lim)) {
            if (lo > lo_lim) --lo;
            if (hi - lo < 7 && hi < hi_lim) ++hi;
        }
        windows.push_back({lo, hi});
    }
    return windows;
}

DipFit fit_lorentzian(const TransmissionTrace& trace, const IndexRange& window) {
    check_trace(trace);
    const Eigen::Index n = trace.transmission.size();
    if (window.begin < 0 || window.end > n || window.end - window.begin < 7) {
        throw DomainError("fit_lorentzian: window must hold >= 7 samples within the trace");
    }
    const Eigen::Index m = window.end - window.begin;
    const Eigen::ArrayXd f =
        trace.frequencies_thz.segment(window.begin, m);
    const Eigen::ArrayXd y = trace.transmission.segment(window.begin, m);

    // local coordinates in GHz around the window center frequency
    const double f_ref = f[m / 2];
    const Eigen::ArrayXd x = (f - f_ref) * 1e3;

    Eigen::Index imin = 0;
    y.minCoeff(&imin);
    const double depth0 = 1.0 - y[imin];
    if (imin == 0 || imin == m - 1 || depth0 <= 0.0) {
        throw FitError("fit_lorentzian: window has no interior dip", DipFit{});
    }
    // half-depth crossings for the width guess
    const double half_level = 1.0 - 0.5 * depth0;
    Eigen::Index li = imin, ri = imin;
    while (li > 0 && y[li] < half_level) --li;
    while (ri < m - 1 && y[ri] < half_level) ++ri;
    double gamma0 = std::max(x[ri] - x[li], (x[1] - x[0]) * 2.0);

    Eigen::Vector3d p(x[imin], gamma0, depth0);  // center, gamma, depth
    double lambda = 1e-3;

    auto residuals = [&](const Eigen::Vector3d& q, Eigen::VectorXd& r,
                         Eigen::Matrix<double, Eigen::Dynamic, 3>* jac) {
        const double h = 0.25 * q[1] * q[1];
        for (Eigen::Index i = 0; i < m; ++i) {
            const double u = x[i] - q[0];
            const double dd = u * u + h;
            const double lor = h / dd;
            r[i] = (1.0 - q[2] * lor) - y[i];
            if (jac) {
                (*jac)(i, 0) = -q[2] * 2.0 * u * h / (dd * dd);
                (*jac)(i, 1) = -q[2] * 0.5 * q[1] * u * u / (dd * dd);
                (*jac)(i, 2) = -lor;
            }
        }
    };

    Eigen::VectorXd r(m);
    Eigen::Matrix<double, Eigen::Dynamic, 3> jac(m, 3);
    residuals(p, r, &jac);
    double chi2 = r.squaredNorm();
    bool converged = false;
    for (int iter = 0; iter < 100 && !converged; ++iter) {
        const Eigen::Matrix3d jtj = jac.transpose() * jac;
        const Eigen::Vector3d jtr = jac.transpose() * r;
        Eigen::Matrix3d damped = jtj;
        damped.diagonal() += lambda * jtj.diagonal();
        const Eigen::Vector3d step = damped.ldlt().solve(-jtr);
        // parameter scales: the center offset is naturally scaled by the
        // width, not by its own (possibly near-zero) value
        const Eigen::Array3d scale(std::max(std::abs(p[0]), std::abs(p[1])),
                                   std::abs(p[1]), std::abs(p[2]));
        const double rel_step =
            (step.array().abs() / scale.max(Eigen::Array3d::Constant(1e-12))).maxCoeff();
        if (rel_step < 1e-8) {
            converged = true;
            break;
        }
        const Eigen::Vector3d q = p + step;
        bool ok = q[1] > 0.0 && q[2] > 0.0 && q[2] < 1.5;
        if (ok) {
            Eigen::VectorXd r_try(m);
            residuals(q, r_try, nullptr);
            const double chi2_try = r_try.squaredNorm();
            ok = chi2_try <= chi2;
            if (ok) {
                p = q;
                chi2 = chi2_try;
                residuals(p, r, &jac);
                lambda = std::max(lambda * 0.3, 1e-12);
            }
        }
        if (!ok) {
            lambda *= 3.0;
            if (lambda > 1e14) break;
        }
    }

    DipFit fit;
    fit.center_thz = f_ref + p[0] * 1e-3;
    fit.loaded_q = fit.center_thz / (p[1] * 1e-3);
    fit.depth = p[2];
    fit.residual_rms = std::sqrt(chi2 / static_cast<double>(m));
    const Eigen::Matrix3d jtj = jac.transpose() * jac;
    const double dof = static_cast<double>(m) - 3.0;
    if (dof > 0.0) {
        const Eigen::Matrix3d cov = jtj.inverse() * (chi2 / dof);
        fit.covariance_diag = cov.diagonal();
    }
    if (!converged) {
        throw FitError("fit_lorentzian: no convergence after 100 iterations", fit);
    }
    return fit;
}

SlopeFit fit_tuning_slope(const std::vector<std::pair<double, double>>& voltage_center_thz,
                          double te_reference_slope_ghz_per_v) {
    if (voltage_center_thz.size() < 3) {
        throw DomainError("fit_tuning_slope: need at least 3 points");
    }
    const auto n = static_cast<double>(voltage_center_thz.size());
    double v_mean = 0.0, y_mean = 0.0;
    for (const auto& [v, c] : voltage_center_thz) {
        v_mean += v;
        y_mean += c * 1e3;
    }
    v_mean /= n;
    y_mean /= n;
    double svv = 0.0, svy = 0.0, syy = 0.0;
    for (const auto& [v, c] : voltage_center_thz) {
        const double dv = v - v_mean;
        const double dy = c * 1e3 - y_mean;
        svv += dv * dv;
        svy += dv * dy;
        syy += dy * dy;
    }
    if (!(svv > 0.0)) {
        throw DomainError("fit_tuning_slope: all voltages are equal");
    }
    SlopeFit fit;
    fit.slope_ghz_per_v = svy / svv;
    fit.intercept_ghz = y_mean - fit.slope_ghz_per_v * v_mean;
    double ss_res = 0.0;
    for (const auto& [v, c] : voltage_center_thz) {
        const double pred = fit.intercept_ghz + fit.slope_ghz_per_v * v;
        ss_res += (c * 1e3 - pred) * (c * 1e3 - pred);
    }
    fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;

    if (te_reference_slope_ghz_per_v > 0.0) {
        const double rel_te = std::abs(fit.slope_ghz_per_v / te_reference_slope_ghz_per_v - 1.0);
        const double rel_tm =
            std::abs(fit.slope_ghz_per_v / (1.75 * te_reference_slope_ghz_per_v) - 1.0);
        if (rel_te <= 0.25) {
            fit.polarization_guess = PolarizationGuess::TE;
        } else if (rel_tm <= 0.25) {
            fit.polarization_guess = PolarizationGuess::TM;
        }
    }
    return fit;
}

namespace {

int pol_rank(Polarization p) { return p == Polarization::TE ? 0 : 1; }

bool label_less(const ModeId& a, const ModeId& b) {
    if (a.radial_order_q != b.radial_order_q) return a.radial_order_q < b.radial_order_q;
    if (a.angular_l != b.angular_l) return a.angular_l < b.angular_l;
    if (a.azimuthal_m != b.azimuthal_m) return a.azimuthal_m < b.azimuthal_m;
    return pol_rank(a.polarization) < pol_rank(b.polarization);
}

bool labels_less(const std::vector<ModeId>& a, const std::vector<ModeId>& b) {
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
        if (label_less(a[i], b[i])) return true;
        if (label_less(b[i], a[i])) return false;
    }
    return false;
}

struct Hypothesis {
    double objective = std::numeric_limits<double>::infinity();
    std::vector<ModeId> labels;
    std::vector<double> model_freqs;
};

/// Occam penalty for a single label: high azimuthal ladder indices are
/// disfavored (2.25 GHz^2 per (l - |m|)^2), which resolves labeling
/// degeneracies of sparse dip sets deterministically.
double label_penalty(const ModeId& id) {
    const double dm = static_cast<double>(id.angular_l - std::abs(id.azimuthal_m));
    return 2.25 * dm * dm;
}

/// Plausibility penalty: a label with ladder index l - |m| = d predicts the
/// d lines below it in |m|.  Each predicted line that falls inside the
/// observed span without a dip near it (6 GHz) costs 25 GHz^2 - ladder
/// members toward the equator couple at least as strongly, so a real
/// spectrum does not skip them.
double missing_ladder_penalty(const std::vector<ModeId>& ids,
                              const std::vector<double>& freqs_ghz,
                              const std::vector<double>& dips_ghz,
                              const std::vector<ModeLine>& lines, double offset_ghz) {
    double penalty = 0.0;
    for (const auto& id : ids) {
        const int dm = id.angular_l - std::abs(id.azimuthal_m);
        for (int step = 1; step <= dm; ++step) {
            const int m_pred = std::abs(id.azimuthal_m) + step;
            for (const auto& line : lines) {
                if (line.mode.radial_order_q != id.radial_order_q ||
                    line.mode.angular_l != id.angular_l ||
                    line.mode.azimuthal_m != m_pred ||
                    line.mode.polarization != id.polarization) {
                    continue;
                }
                const double predicted = line.frequency_thz * 1e3 - offset_ghz;
                if (predicted < dips_ghz.front() - 2.0 ||
                    predicted > dips_ghz.back() + 2.0) {
                    break;
                }
                double nearest = 1e300;
                for (const double d : dips_ghz) {
                    nearest = std::min(nearest, std::abs(predicted - d));
                }
                for (const double f : freqs_ghz) {
                    nearest = std::min(nearest, std::abs(predicted - (f - offset_ghz)));
                }
                if (nearest > 6.0) penalty += 25.0;
                break;
            }
        }
    }
    return penalty;
}

/// Exhaustive order-preserving assignment of sorted dips to candidate model
/// lines; pairwise-interval objective in GHz^2 (plus the label penalty) with
/// branch-and-bound pruning.
void search_assignment(const std::vector<double>& dips_ghz,
                       const std::vector<ModeLine>& lines, double fsr_ghz,
                       Hypothesis& best) {
    const std::size_t k = dips_ghz.size();
    // candidate indices per dip: anchored on dip 0
    std::vector<std::size_t> chosen(k);
    std::vector<double> freqs(k);
    std::vector<ModeId> ids(k);

    for (std::size_t c0 = 0; c0 < lines.size(); ++c0) {
        if (std::abs(lines[c0].frequency_thz * 1e3 - dips_ghz[0]) > 0.55 * fsr_ghz) {
            continue;
        }
        const double offset = lines[c0].frequency_thz * 1e3 - dips_ghz[0];
        chosen[0] = c0;
        freqs[0] = lines[c0].frequency_thz * 1e3;
        ids[0] = lines[c0].mode;

        // depth-first over remaining dips
        std::vector<std::size_t> stack_pos(k, 0);
        std::size_t depth = 1;
        std::vector<double> partial(k, label_penalty(ids[0]));
        while (true) {
            if (depth == k) {
                const double obj =
                    partial[k - 1] +
                    missing_ladder_penalty(ids, freqs, dips_ghz, lines, offset);
                if (obj < best.objective ||
                    (obj == best.objective && labels_less(ids, best.labels))) {
                    best.objective = obj;
                    best.labels = ids;
                    best.model_freqs = freqs;
                }
                --depth;
                ++stack_pos[depth];
                continue;
            }
            bool advanced = false;
            for (std::size_t ci = stack_pos[depth]; ci < lines.size(); ++ci) {
                const double f_ghz = lines[ci].frequency_thz * 1e3;
                if (std::abs(f_ghz - (dips_ghz[depth] + offset)) > 0.35 * fsr_ghz) continue;
                bool used = false;
                for (std::size_t j = 0; j < depth; ++j) {
                    if (chosen[j] == ci) { used = true; break; }
                }
                if (used) continue;
                double obj = partial[depth - 1] + label_penalty(lines[ci].mode);
                for (std::size_t j = 0; j < depth; ++j) {
                    const double model_iv = f_ghz - freqs[j];
                    const double obs_iv = dips_ghz[depth] - dips_ghz[j];
                    obj += (model_iv - obs_iv) * (model_iv - obs_iv);
                }
                if (obj >= best.objective) continue;
                chosen[depth] = ci;
                freqs[depth] = f_ghz;
                ids[depth] = lines[ci].mode;
                partial[depth] = obj;
                stack_pos[depth] = ci;
                advanced = true;
                break;
            }
            if (advanced) {
                ++depth;
                if (depth < k) stack_pos[depth] = 0;
                continue;
            }
            if (depth == 1) break;
            --depth;
            ++stack_pos[depth];
        }
    }
}

double pairwise_objective(const std::vector<double>& dips_ghz,
                          const std::vector<double>& model_ghz) {
    double obj = 0.0;
    for (std::size_t i = 0; i < dips_ghz.size(); ++i) {
        for (std::size_t j = i + 1; j < dips_ghz.size(); ++j) {
            const double d = (model_ghz[i] - model_ghz[j]) - (dips_ghz[i] - dips_ghz[j]);
            obj += d * d;
        }
    }
    return obj;
}

}  // namespace

ModeAssignment assign_modes(const std::vector<double>& dip_centers_thz,
                            const SpheroidGeometry& geometry_prior,
                            const OpticalMaterial& material,
                            const AssignOptions& options) {
    validate_geometry(geometry_prior);
    if (dip_centers_thz.size() < 2) {
        throw DomainError("assign_modes: need at least 2 dips");
    }
    // sorted view with the original order remembered
    std::vector<std::size_t> order(dip_centers_thz.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dip_centers_thz[a] < dip_centers_thz[b];
    });
    std::vector<double> dips_ghz;
    dips_ghz.reserve(order.size());
    for (const auto idx : order) dips_ghz.push_back(dip_centers_thz[idx] * 1e3);

    const double f_mean_thz = std::accumulate(dip_centers_thz.begin(),
                                              dip_centers_thz.end(), 0.0) /
                              static_cast<double>(dip_centers_thz.size());
    const double fsr_prior_ghz = free_spectral_range(
        geometry_prior, material, kSpeedOfLightThzUm / f_mean_thz);
    if (dips_ghz.back() - dips_ghz.front() < 0.3 * fsr_prior_ghz) {
        throw DomainError("assign_modes: dips span less than 0.3 FSR of the prior");
    }

    ModeFilter filter;
    filter.q_max = options.q_max;
    filter.delta_m_max = options.delta_m_max;

    // weak preference for the least-elliptical explanation among residual
    // ties; must stay well below the per-step label penalty, or it would
    // reward "many small ladder steps" over one, the exact degeneracy it is
    // meant to break.  The pull on a resolved ellipticity is below 1e-4.
    const double npair_d = static_cast<double>(
        dips_ghz.size() * (dips_ghz.size() - 1) / 2);
    auto regularizer = [&](double eps) {
        const double u = eps / options.ellipticity_max;
        return npair_d * u * u;  // (1 GHz)^2 per pair at the bound
    };

    auto evaluate = [&](double a_um, double eps, Hypothesis& best_for_theta) {
        SpheroidGeometry g = geometry_prior;
        g.equatorial_radius_um = a_um;
        g.ellipticity = eps;
        const double margin_thz = 0.6 * fsr_prior_ghz * 1e-3;
        const std::vector<ModeLine> lines =
            spectrum_window(g, material, dips_ghz.front() * 1e-3 - margin_thz,
                            dips_ghz.back() * 1e-3 + margin_thz, filter);
        if (lines.size() < dips_ghz.size()) return;
        search_assignment(dips_ghz, lines, fsr_prior_ghz, best_for_theta);
    };

    // grid stage: keep the best few distinct labelings; the coarse grid can
    // rank candidate labelings incorrectly, so each survivor is polished
    // continuously before the final choice
    struct Candidate {
        Hypothesis hyp;  // objective = pairwise + discrete penalties
        double a_um = 0.0;
        double eps = 0.0;
        double discrete_penalty = 0.0;  // label + missing-ladder part
        double total = std::numeric_limits<double>::infinity();
    };
    constexpr std::size_t kPoolSize = 16;
    std::vector<Candidate> pool;

    // the interval objective cannot distinguish an overall shift of l (the
    // radius gauge), so candidates are deduplicated by discrete structure:
    // relative angular order, ladder index l - |m|, polarization and q
    auto labels_equal = [](const std::vector<ModeId>& a, const std::vector<ModeId>& b) {
        if (a.size() != b.size()) return false;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i].radial_order_q != b[i].radial_order_q ||
                a[i].angular_l - a[0].angular_l != b[i].angular_l - b[0].angular_l ||
                a[i].angular_l - std::abs(a[i].azimuthal_m) !=
                    b[i].angular_l - std::abs(b[i].azimuthal_m) ||
                a[i].polarization != b[i].polarization) {
                return false;
            }
        }
        return true;
    };
    auto pool_sort = [&]() {
        std::sort(pool.begin(), pool.end(), [](const Candidate& x, const Candidate& y) {
            if (x.total != y.total) return x.total < y.total;
            return labels_less(x.hyp.labels, y.hyp.labels);
        });
        if (pool.size() > kPoolSize) pool.resize(kPoolSize);
    };
    auto pool_bound = [&]() {
        return pool.size() < kPoolSize ? std::numeric_limits<double>::infinity()
                                       : pool.back().total;
    };

    const double a0 = geometry_prior.equatorial_radius_um;
    for (int ia = 0; ia < options.radius_steps; ++ia) {
        const double a_um =
            a0 * (1.0 - options.radius_tolerance) +
            a0 * 2.0 * options.radius_tolerance * ia / (options.radius_steps - 1);
        for (int ie = 0; ie < options.ellipticity_steps; ++ie) {
            const double eps =
                options.ellipticity_max * ie / (options.ellipticity_steps - 1);
            Hypothesis h;
            h.objective = pool_bound() - regularizer(eps);  // pruning bound
            if (h.objective <= 0.0) continue;
            evaluate(a_um, eps, h);
            if (h.labels.empty()) continue;
            Candidate cand{h, a_um, eps,
                           h.objective - pairwise_objective(dips_ghz, h.model_freqs),
                           h.objective + regularizer(eps)};
            bool merged = false;
            for (auto& existing : pool) {
                if (labels_equal(existing.hyp.labels, cand.hyp.labels)) {
                    if (cand.total < existing.total) existing = cand;
                    merged = true;
                    break;
                }
            }
            if (!merged) pool.push_back(cand);
            pool_sort();
        }
    }
    if (pool.empty()) {
        ModeAssignment out;
        out.fitted_radius_um = a0;
        out.fitted_ellipticity = 0.0;
        out.objective_ghz2 = std::numeric_limits<double>::infinity();
        out.assigned = false;
        return out;
    }

    // continuous Gauss-Newton polish of (a, eps) per candidate labeling
    const double lam_seed = kSpeedOfLightThzUm / f_mean_thz;
    auto model_freqs_at = [&](const std::vector<ModeId>& labels, double a_um, double eps,
                              std::vector<double>& out_ghz) {
        SpheroidGeometry g = geometry_prior;
        g.equatorial_radius_um = a_um;
        g.ellipticity = eps;
        out_ghz.resize(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            out_ghz[i] = mode_frequency(g, material, labels[i], lam_seed) * 1e3;
        }
    };
    auto polish = [&](Candidate& cand) {
        const double label_pen = cand.discrete_penalty;  // fixed for this labeling
        std::vector<double> f0, fa, fe, f_try;
        double obj_prev = cand.total;
        for (int it = 0; it < 8; ++it) {
            const double da = 1e-5 * cand.a_um;
            const double de = 1e-4;
            model_freqs_at(cand.hyp.labels, cand.a_um, cand.eps, f0);
            model_freqs_at(cand.hyp.labels, cand.a_um + da, cand.eps, fa);
            model_freqs_at(cand.hyp.labels, cand.a_um, cand.eps + de, fe);
            const std::size_t k = dips_ghz.size();
            const std::size_t npair = k * (k - 1) / 2;
            Eigen::VectorXd r(npair);
            Eigen::MatrixXd jac(npair, 2);
            std::size_t row = 0;
            for (std::size_t i = 0; i < k; ++i) {
                for (std::size_t j = i + 1; j < k; ++j, ++row) {
                    const double model_iv = f0[i] - f0[j];
                    r[row] = model_iv - (dips_ghz[i] - dips_ghz[j]);
                    jac(row, 0) = ((fa[i] - fa[j]) - model_iv) / da;
                    jac(row, 1) = ((fe[i] - fe[j]) - model_iv) / de;
                }
            }
            const Eigen::Vector2d step =
                (jac.transpose() * jac).ldlt().solve(-jac.transpose() * r);
            const double a_try =
                std::clamp(cand.a_um + step[0], a0 * (1.0 - options.radius_tolerance),
                           a0 * (1.0 + options.radius_tolerance));
            const double eps_try =
                std::clamp(cand.eps + step[1], 0.0, options.ellipticity_max);
            model_freqs_at(cand.hyp.labels, a_try, eps_try, f_try);
            const double obj_try = pairwise_objective(dips_ghz, f_try) + label_pen +
                                   regularizer(eps_try);
            if (obj_try < obj_prev) {
                cand.a_um = a_try;
                cand.eps = eps_try;
                obj_prev = obj_try;
            } else {
                break;
            }
        }
        cand.total = obj_prev;
    };
    for (auto& cand : pool) polish(cand);
    pool_sort();
    const Candidate& best = pool.front();

    ModeAssignment out;
    out.labels.resize(dip_centers_thz.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        out.labels[order[i]] = best.hyp.labels[i];
    }
    out.fitted_radius_um = best.a_um;
    out.fitted_ellipticity = best.eps;
    std::vector<double> f_final;
    model_freqs_at(best.hyp.labels, best.a_um, best.eps, f_final);
    out.objective_ghz2 = pairwise_objective(dips_ghz, f_final);
    out.assigned =
        out.objective_ghz2 <= options.objective_threshold_ghz2_per_pair * npair_d;
    return out;
}

CalibrationResult calibrate_device(const std::vector<TransmissionTrace>& sweep,
                                   const SpheroidGeometry& geometry_prior,
                                   const OpticalMaterial& material,
                                   const CalibrateOptions& options) {
    validate_geometry(geometry_prior);  // prior participates in interface only
    std::vector<std::size_t> order(sweep.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return sweep[a].metadata.voltage_v < sweep[b].metadata.voltage_v;
    });
    std::vector<double> voltages;
    for (const auto idx : order) voltages.push_back(sweep[idx].metadata.voltage_v);
    const std::size_t distinct =
        std::set<double>(voltages.begin(), voltages.end()).size();
    if (sweep.size() < 3 || distinct < 3) {
        throw DomainError("calibrate_device: need >= 3 traces at distinct voltages");
    }

    CalibrationResult result;

    // detect + fit per trace
    std::vector<std::vector<double>> centers(sweep.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto& tr = sweep[order[k]];
        for (const auto& win : detect_dips(tr, options.prominence)) {
            try {
                centers[k].push_back(fit_lorentzian(tr, win).center_thz);
            } catch (const FitError& e) {
                std::ostringstream os;
                os << "dip fit failed at voltage " << voltages[k] << ": " << e.what();
                result.warnings.push_back(os.str());
            }
        }
        std::sort(centers[k].begin(), centers[k].end());
    }
    if (centers[0].empty()) {
        throw DomainError("calibrate_device: no trackable dip in the first trace");
    }

    // nearest-neighbor tracking against the predicted position
    struct Track {
        std::vector<std::pair<double, double>> points;  // (V, center THz)
        bool alive = true;
    };
    std::vector<Track> tracks(centers[0].size());
    for (std::size_t i = 0; i < centers[0].size(); ++i) {
        tracks[i].points.emplace_back(voltages[0], centers[0][i]);
    }
    for (std::size_t k = 1; k < centers.size(); ++k) {
        std::vector<bool> taken(centers[k].size(), false);
        for (auto& track : tracks) {
            if (!track.alive) continue;
            const auto& pts = track.points;
            double slope_est = 0.0;  // THz per volt
            if (pts.size() >= 2) {
                const auto& p1 = pts[pts.size() - 2];
                const auto& p2 = pts.back();
                if (p2.first != p1.first) {
                    slope_est = (p2.second - p1.second) / (p2.first - p1.first);
                }
            }
            const double predicted =
                pts.back().second + slope_est * (voltages[k] - pts.back().first);
            double best_err = options.track_gate_ghz * 1e-3;
            std::ptrdiff_t best_i = -1;
            for (std::size_t i = 0; i < centers[k].size(); ++i) {
                if (taken[i]) continue;
                const double err = std::abs(centers[k][i] - predicted);
                if (err < best_err) {
                    best_err = err;
                    best_i = static_cast<std::ptrdiff_t>(i);
                }
            }
            if (best_i < 0) {
                track.alive = false;
                std::ostringstream os;
                os << "track starting at " << pts.front().second
                   << " THz lost at voltage " << voltages[k];
                result.warnings.push_back(os.str());
            } else {
                taken[static_cast<std::size_t>(best_i)] = true;
                track.points.emplace_back(voltages[k],
                                          centers[k][static_cast<std::size_t>(best_i)]);
            }
        }
    }

    // slope per completed track
    std::vector<SlopeFit> fits;
    for (const auto& track : tracks) {
        if (track.points.size() >= 3) {
            fits.push_back(fit_tuning_slope(track.points));
        }
    }
    if (fits.empty()) {
        throw DomainError("calibrate_device: no track survived with >= 3 points");
    }
    std::sort(fits.begin(), fits.end(), [](const SlopeFit& a, const SlopeFit& b) {
        return a.slope_ghz_per_v < b.slope_ghz_per_v;
    });

    const SlopeFit& te = fits.front();
    result.slope_te_ghz_per_v = te.slope_ghz_per_v;
    if (fits.size() >= 2) {
        const SlopeFit& tm = fits.back();
        result.slope_tm_ghz_per_v = tm.slope_ghz_per_v;
        result.ratio = tm.slope_ghz_per_v / te.slope_ghz_per_v;
    } else {
        result.warnings.push_back(
            "single track: polarization assumed TE for strain inversion");
    }
    const double response_te = strain_tuning_response(material, Polarization::TE);
    result.strain_per_volt = te.slope_ghz_per_v / (te.intercept_ghz * response_te);
    return result;
}

}  // namespace wgm
