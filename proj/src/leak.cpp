#include "bdaudit/leak.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "bdaudit/errors.hpp"
#include "bdaudit/parallel.hpp"
#include "bdaudit/rng.hpp"

namespace bdaudit {

namespace {

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v, double mean) {
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size()));
}

// Solve a 3x3 linear system in place; returns false when singular.
bool solve3(double m[3][3], double rhs[3], double out[3]) {
    int perm[3] = {0, 1, 2};
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(m[perm[r]][col]) > std::abs(m[perm[piv]][col])) piv = r;
        std::swap(perm[col], perm[piv]);
        const double diag = m[perm[col]][col];
        if (std::abs(diag) < 1e-300) return false;
        for (int r = col + 1; r < 3; ++r) {
            const double f = m[perm[r]][col] / diag;
            for (int c = col; c < 3; ++c) m[perm[r]][c] -= f * m[perm[col]][c];
            rhs[perm[r]] -= f * rhs[perm[col]];
        }
    }
    for (int col = 2; col >= 0; --col) {
        double acc = rhs[perm[col]];
        for (int c = col + 1; c < 3; ++c) acc -= m[perm[col]][c] * out[c];
        out[col] = acc / m[perm[col]][col];
    }
    return true;
}

double model_eval(double a, double b, double c, double x) {
    const double e = std::exp(std::min(b * x + c, 50.0));
    return a * (1.0 - e);
}

double sse_of(const std::vector<double>& xs, const std::vector<double>& ys, double a, double b,
              double c) {
    double sse = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - model_eval(a, b, c, xs[i]);
        sse += r * r;
    }
    return sse;
}

FittedCurve fit_points_lm(const std::vector<double>& xs, const std::vector<double>& ys,
                          bool profile) {
    const std::size_t n = xs.size();
    if (n < 4) throw SizeError("fit_curve: need at least 4 points");

    // Initialization: a0 = max(y), (b0, c0) from the log-linear fit of
    // ln(1 - y/a0) vs x, clipped into the log domain.
    double a = *std::max_element(ys.begin(), ys.end());
    a = std::clamp(a, 1e-3, 1.0);
    double sx = 0, sz = 0, sxx = 0, sxz = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double arg = std::clamp(1.0 - ys[i] / a, 1e-6, 1.0 - 1e-9);
        const double z = std::log(arg);
        sx += xs[i];
        sz += z;
        sxx += xs[i] * xs[i];
        sxz += xs[i] * z;
    }
    const double nn = static_cast<double>(n);
    const double denom = nn * sxx - sx * sx;
    double b = denom != 0.0 ? (nn * sxz - sx * sz) / denom : -0.01;
    double c = (sz - b * sx) / nn;
    b = std::min(b, 0.0);

    // The model is linear in a, so the optimal a given (b, c) has a closed
    // form. Re-profiling a after every accepted step avoids a slow crawl when
    // the unconstrained optimum lies beyond the a <= 1 bound.
    const auto profile_a = [&](double bb, double cc, double fallback) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double g = 1.0 - std::exp(std::min(bb * xs[i] + cc, 50.0));
            num += ys[i] * g;
            den += g * g;
        }
        return den > 0.0 ? std::clamp(num / den, 0.0, 1.0) : fallback;
    };
    if (profile) a = profile_a(b, c, a);

    double sse = sse_of(xs, ys, a, b, c);
    double mu = 1e-3;
    const std::size_t max_iter = 1000;
    std::size_t iter = 0;
    bool converged = false;
    for (; iter < max_iter; ++iter) {
        // Gauss-Newton pieces at the current parameters.
        double jtj[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
        double jtr[3] = {0, 0, 0};
        for (std::size_t i = 0; i < n; ++i) {
            const double e = std::exp(std::min(b * xs[i] + c, 50.0));
            const double r = ys[i] - a * (1.0 - e);
            const double j0 = -(1.0 - e);     // d r / d a
            const double j1 = a * xs[i] * e;  // d r / d b
            const double j2 = a * e;          // d r / d c
            const double jv[3] = {j0, j1, j2};
            for (int p = 0; p < 3; ++p) {
                for (int q = 0; q < 3; ++q) jtj[p][q] += jv[p] * jv[q];
                jtr[p] += jv[p] * r;
            }
        }
        double lhs[3][3];
        for (int p = 0; p < 3; ++p)
            for (int q = 0; q < 3; ++q)
                lhs[p][q] = jtj[p][q] + (p == q ? mu * std::max(jtj[p][p], 1e-12) : 0.0);
        double rhs[3] = {-jtr[0], -jtr[1], -jtr[2]};
        double step[3];
        if (!solve3(lhs, rhs, step)) {
            mu *= 10.0;
            continue;
        }
        double nb = std::min(b + step[1], 0.0);
        double nc = c + step[2];
        double na = std::clamp(a + step[0], 0.0, 1.0);
        if (profile) na = profile_a(nb, nc, na);
        const double new_sse = sse_of(xs, ys, na, nb, nc);
        if (new_sse <= sse) {
            const double step_norm = std::sqrt((na - a) * (na - a) + (nb - b) * (nb - b) +
                                               (nc - c) * (nc - c));
            const double gain = sse - new_sse;
            a = na;
            b = nb;
            c = nc;
            sse = new_sse;
            mu = std::max(mu / 3.0, 1e-12);
            if (step_norm < 1e-9 || gain <= 1e-8 * std::max(sse, 1e-16)) {
                converged = true;
                ++iter;
                break;
            }
        } else {
            mu *= 5.0;
            if (mu > 1e12) {
                converged = true;  // damping saturated; no smaller step improves
                ++iter;
                break;
            }
        }
    }

    FittedCurve fit;
    fit.a = a;
    fit.b = b;
    fit.c = c;
    fit.rmse = std::sqrt(sse / nn);
    fit.x_lo = *std::min_element(xs.begin(), xs.end());
    fit.x_hi = *std::max_element(xs.begin(), xs.end());
    fit.iterations = iter;
    if (!converged && iter >= max_iter)
        throw CurveFitError("fit_curve: no convergence after " + std::to_string(max_iter) +
                                " iterations",
                            a, b, c, fit.rmse);
    return fit;
}

FittedCurve fit_points(const std::vector<double>& xs, const std::vector<double>& ys) {
    try {
        return fit_points_lm(xs, ys, false);
    } catch (const CurveFitError&) {
        // the plain run crawls along the a <= 1 bound on some curves;
        // the profiled restart converges there
        return fit_points_lm(xs, ys, true);
    }
}

}  // namespace

void AccuracyCurve::validate() const {
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (i > 0 && points[i].x <= points[i - 1].x)
            throw BoundsError("accuracy curve: x must be strictly increasing");
        if (points[i].y_mean < 0.0 || points[i].y_mean > 1.0)
            throw DomainError("accuracy curve: y must lie in [0, 1]");
    }
}

double FittedCurve::eval(double x) const { return model_eval(a, b, c, x); }

double double_trigger_attack_accuracy(const ClassifierModel& model, const Dataset& test_set,
                                      const BackdoorPlan& plan) {
    if (test_set.n_samples() == 0)
        throw SizeError("double_trigger_attack_accuracy: empty test set");
    const Trigger attr_trigger(plan.attribute_trigger.features, plan.attribute_trigger.value);
    std::size_t eligible = 0, flipped = 0;
    std::vector<double> row;
    for (std::size_t i = 0; i < test_set.n_samples(); ++i) {
        if (test_set.labels[i] == plan.secondary_target) continue;
        const auto src = test_set.row(i);
        row.assign(src.begin(), src.end());
        apply_trigger(row, attr_trigger);
        apply_trigger(row, plan.secondary);
        ++eligible;
        if (model.predict(row) == plan.secondary_target) ++flipped;
    }
    if (eligible == 0)
        throw SizeError("double_trigger_attack_accuracy: no eligible non-target samples");
    return static_cast<double>(flipped) / static_cast<double>(eligible);
}

AccuracyCurve sweep(const Dataset& train_set, const BackdoorPlan& plan, const SweepConfig& config,
                    const Dataset& test_set, std::uint64_t seed) {
    if (config.p_grid.empty()) throw ConfigError("sweep: p_grid must not be empty");
    for (std::size_t i = 1; i < config.p_grid.size(); ++i)
        if (config.p_grid[i] <= config.p_grid[i - 1])
            throw ConfigError("sweep: p_grid must be strictly increasing");
    if (config.repeats < 1) throw ConfigError("sweep: repeats must be >= 1");
    plan.validate(train_set);

    // Victim pool size: how many attribute-poisoned rows the fraction yields.
    const auto& attr = train_set.attribute(plan.attribute_trigger.attribute);
    std::vector<std::size_t> group_sizes(attr.group_names.size(), 0);
    for (int g : attr.groups) group_sizes[static_cast<std::size_t>(g)]++;
    std::size_t x_k = 0;
    for (std::size_t gs : group_sizes)
        x_k += static_cast<std::size_t>(plan.attribute_poison_fraction * static_cast<double>(gs));

    struct Cell {
        std::size_t p_idx;
        std::size_t r;
    };
    std::vector<Cell> cells;
    for (std::size_t pi = 0; pi < config.p_grid.size(); ++pi)
        for (std::size_t r = 0; r < config.repeats; ++r) cells.push_back({pi, r});

    std::vector<double> results(cells.size(), 0.0);
    parallel_for(cells.size(), config.jobs, [&](std::size_t ci) {
        const auto [pi, r] = cells[ci];
        const std::size_t x = poison_count(config.p_grid[pi], x_k);
        const std::uint64_t cell_seed = derive_seed(seed, {pi, r});
        Dataset poisoned =
            poison_attribute(train_set, plan.attribute_trigger, plan.attribute_poison_fraction,
                             cell_seed);
        poisoned = inject_secondary(poisoned, plan, x, cell_seed);
        TrainConfig tc = config.train;
        tc.seed = cell_seed;
        const ClassifierModel model = train(poisoned, tc);
        results[ci] = double_trigger_attack_accuracy(model, test_set, plan);
    });

    AccuracyCurve curve;
    curve.repeats = config.repeats;
    curve.attribute = plan.attribute_trigger.attribute;
    for (std::size_t pi = 0; pi < config.p_grid.size(); ++pi) {
        CurvePoint pt;
        pt.x = poison_count(config.p_grid[pi], x_k);
        for (std::size_t ci = 0; ci < cells.size(); ++ci)
            if (cells[ci].p_idx == pi) pt.repeats.push_back(results[ci]);
        pt.y_mean = mean_of(pt.repeats);
        pt.y_std = std_of(pt.repeats, pt.y_mean);
        // merge grid points that floor to the same poison count
        if (!curve.points.empty() && curve.points.back().x == pt.x) {
            auto& prev = curve.points.back();
            prev.repeats.insert(prev.repeats.end(), pt.repeats.begin(), pt.repeats.end());
            prev.y_mean = mean_of(prev.repeats);
            prev.y_std = std_of(prev.repeats, prev.y_mean);
        } else {
            curve.points.push_back(std::move(pt));
        }
    }
    curve.validate();
    return curve;
}

AccuracyCurve remove_outliers(const AccuracyCurve& curve) {
    if (curve.points.size() < 4) throw SizeError("remove_outliers: need at least 4 points");
    std::vector<double> xs, ys;
    for (const auto& p : curve.points) {
        xs.push_back(static_cast<double>(p.x));
        ys.push_back(p.y_mean);
    }
    double a, b, c;
    try {
        const FittedCurve pre = fit_points(xs, ys);
        a = pre.a;
        b = pre.b;
        c = pre.c;
    } catch (const CurveFitError& e) {
        a = e.a();
        b = e.b();
        c = e.c();
    }
    std::vector<double> res(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
        res[i] = std::abs(ys[i] - model_eval(a, b, c, xs[i]));
    std::vector<double> sorted = res;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double median =
        n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    // Absolute floor: on a near-perfect fit the median residual is tiny and
    // ordinary accuracy jitter would be misread as outliers.
    const double threshold = std::max(2.0 * median, 0.03);

    std::vector<std::size_t> offenders;
    for (std::size_t i = 0; i < res.size(); ++i)
        if (median > 0.0 && res[i] > threshold) offenders.push_back(i);
    // never remove more than 20% of the points, and never go below 4 points
    const std::size_t cap =
        std::min(static_cast<std::size_t>(0.2 * static_cast<double>(n)), n - 4);
    bool truncated = false;
    if (offenders.size() > cap) {
        std::sort(offenders.begin(), offenders.end(),
                  [&](std::size_t i, std::size_t j) { return res[i] > res[j]; });
        offenders.resize(cap);
        std::sort(offenders.begin(), offenders.end());
        truncated = true;  // some detected outliers had to stay
    }
    if (offenders.empty()) {
        if (!truncated) return curve;
        AccuracyCurve out = curve;
        out.outlier_warning = true;
        return out;
    }
    AccuracyCurve out = curve;
    out.outlier_warning = truncated;
    out.points.clear();
    std::size_t oi = 0;
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        if (oi < offenders.size() && offenders[oi] == i) {
            ++oi;
            continue;
        }
        out.points.push_back(curve.points[i]);
    }
    return out;
}

FittedCurve fit_curve(const AccuracyCurve& curve) {
    std::vector<double> xs, ys;
    for (const auto& p : curve.points) {
        xs.push_back(static_cast<double>(p.x));
        ys.push_back(p.y_mean);
    }
    return fit_points(xs, ys);
}

ReferenceLibrary build_reference_library(const Dataset& collab_data, const std::string& attribute,
                                         const std::string& group,
                                         const std::vector<double>& s_grid,
                                         const BackdoorPlan& plan, const SweepConfig& config,
                                         std::uint64_t seed) {
    if (s_grid.empty()) throw ConfigError("build_reference_library: empty s_grid");
    ReferenceLibrary lib;
    lib.attribute = attribute;
    lib.group = group;
    lib.config = config;
    lib.seed = seed;
    lib.dataset_hash = collab_data.content_hash();

    const SplitPair parts = split(collab_data, 0.6, derive_seed(seed, {0x5F11}));
    std::vector<double> grid = s_grid;
    std::sort(grid.begin(), grid.end());
    for (std::size_t si = 0; si < grid.size(); ++si) {
        const double s = grid[si];
        try {
            const Dataset biased =
                make_biased_subset(parts.train, attribute, group, s, derive_seed(seed, {0xB1, si}));
            AccuracyCurve curve =
                sweep(biased, plan, config, parts.test, derive_seed(seed, {0xCE, si}));
            curve.sample_pct = s;
            curve.group = group;
            if (curve.points.size() >= 5) curve = remove_outliers(curve);
            ReferenceEntry entry;
            entry.s = s;
            entry.fit = fit_curve(curve);
            entry.curve = std::move(curve);
            lib.entries.push_back(std::move(entry));
        } catch (const Error& e) {
            lib.failures.emplace_back(s, e.what());
        }
    }
    if (lib.entries.size() < 2)
        throw ConfigError("build_reference_library: fewer than 2 reference curves succeeded");
    return lib;
}

DetectionReport detect(const AccuracyCurve& cloud_curve, const ReferenceLibrary& library,
                       double bias_threshold) {
    if (library.entries.empty()) throw SizeError("detect: reference library is empty");
    AccuracyCurve cleaned = cloud_curve;
    if (cleaned.points.size() >= 5) cleaned = remove_outliers(cleaned);
    const FittedCurve cloud_fit = fit_curve(cleaned);

    double lo = cloud_fit.x_lo, hi = cloud_fit.x_hi;
    for (const auto& e : library.entries) {
        lo = std::max(lo, e.fit.x_lo);
        hi = std::min(hi, e.fit.x_hi);
    }
    if (!(hi > lo))
        throw IncomparableCurvesError("detect: curve validity ranges do not overlap");

    constexpr std::size_t kGrid = 100;
    DetectionReport report;
    report.cloud_fit = cloud_fit;
    report.bias_threshold = bias_threshold;
    double best_mse = std::numeric_limits<double>::infinity();
    for (const auto& e : library.entries) {
        double mse = 0.0;
        for (std::size_t i = 0; i < kGrid; ++i) {
            const double x = lo + (hi - lo) * static_cast<double>(i) / (kGrid - 1);
            const double diff = cloud_fit.eval(x) - e.fit.eval(x);
            mse += diff * diff;
        }
        mse /= static_cast<double>(kGrid);
        report.mse_by_s.emplace_back(e.s, mse);
        if (mse < best_mse || (mse == best_mse && e.s < report.s_hat)) {
            best_mse = mse;  // ties break toward the smaller s
            report.s_hat = e.s;
        }
    }
    report.biased = report.s_hat >= bias_threshold;
    return report;
}

void save_curve_csv(const AccuracyCurve& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write curve file '" + path + "'");
    out << "x,y_mean,y_std,repeats\n";
    for (const auto& p : curve.points) {
        out << p.x << ',' << p.y_mean << ',' << p.y_std << ',';
        for (std::size_t i = 0; i < p.repeats.size(); ++i)
            out << (i ? ";" : "") << p.repeats[i];
        out << '\n';
    }
}

namespace {

nlohmann::json curve_to_json(const AccuracyCurve& c) {
    nlohmann::json j;
    j["sample_pct"] = c.sample_pct;
    j["attribute"] = c.attribute;
    j["group"] = c.group;
    j["repeats"] = c.repeats;
    j["outlier_warning"] = c.outlier_warning;
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : c.points)
        pts.push_back({{"x", p.x}, {"y_mean", p.y_mean}, {"y_std", p.y_std}, {"raw", p.repeats}});
    j["points"] = pts;
    return j;
}

AccuracyCurve curve_from_json(const nlohmann::json& j) {
    AccuracyCurve c;
    c.sample_pct = j.at("sample_pct").get<double>();
    c.attribute = j.at("attribute").get<std::string>();
    c.group = j.at("group").get<std::string>();
    c.repeats = j.at("repeats").get<std::size_t>();
    c.outlier_warning = j.value("outlier_warning", false);
    for (const auto& p : j.at("points")) {
        CurvePoint pt;
        pt.x = p.at("x").get<std::size_t>();
        pt.y_mean = p.at("y_mean").get<double>();
        pt.y_std = p.at("y_std").get<double>();
        pt.repeats = p.at("raw").get<std::vector<double>>();
        c.points.push_back(std::move(pt));
    }
    return c;
}

nlohmann::json fit_to_json(const FittedCurve& f) {
    return {{"a", f.a},       {"b", f.b},       {"c", f.c},
            {"rmse", f.rmse}, {"x_lo", f.x_lo}, {"x_hi", f.x_hi},
            {"iterations", f.iterations}};
}

FittedCurve fit_from_json(const nlohmann::json& j) {
    FittedCurve f;
    f.a = j.at("a").get<double>();
    f.b = j.at("b").get<double>();
    f.c = j.at("c").get<double>();
    f.rmse = j.at("rmse").get<double>();
    f.x_lo = j.at("x_lo").get<double>();
    f.x_hi = j.at("x_hi").get<double>();
    f.iterations = j.value("iterations", std::size_t{0});
    return f;
}

}  // namespace

std::string ReferenceLibrary::to_json() const {
    nlohmann::json j;
    j["schema_version"] = "1";
    j["attribute"] = attribute;
    j["group"] = group;
    j["seed"] = seed;
    j["dataset_hash"] = dataset_hash;
    j["config"] = {{"p_grid", config.p_grid},
                   {"repeats", config.repeats},
                   {"jobs", config.jobs},
                   {"train", {{"learning_rate", config.train.learning_rate},
                              {"epochs", config.train.epochs},
                              {"l2_penalty", config.train.l2_penalty},
                              {"tolerance", config.train.tolerance}}}};
    nlohmann::json entries_json = nlohmann::json::array();
    for (const auto& e : entries) {
        nlohmann::json ej;
        ej["s"] = e.s;
        ej["fit"] = fit_to_json(e.fit);
        ej["curve"] = curve_to_json(e.curve);
        entries_json.push_back(ej);
    }
    j["entries"] = entries_json;
    nlohmann::json fails = nlohmann::json::array();
    for (const auto& [s, why] : failures) fails.push_back({{"s", s}, {"reason", why}});
    j["failures"] = fails;
    return j.dump(2);
}

ReferenceLibrary ReferenceLibrary::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    ReferenceLibrary lib;
    lib.attribute = j.at("attribute").get<std::string>();
    lib.group = j.at("group").get<std::string>();
    lib.seed = j.at("seed").get<std::uint64_t>();
    lib.dataset_hash = j.at("dataset_hash").get<std::uint64_t>();
    const auto& cj = j.at("config");
    lib.config.p_grid = cj.at("p_grid").get<std::vector<double>>();
    lib.config.repeats = cj.at("repeats").get<std::size_t>();
    lib.config.jobs = cj.value("jobs", std::size_t{1});
    const auto& tj = cj.at("train");
    lib.config.train.learning_rate = tj.at("learning_rate").get<double>();
    lib.config.train.epochs = tj.at("epochs").get<std::size_t>();
    lib.config.train.l2_penalty = tj.at("l2_penalty").get<double>();
    lib.config.train.tolerance = tj.at("tolerance").get<double>();
    for (const auto& ej : j.at("entries")) {
        ReferenceEntry e;
        e.s = ej.at("s").get<double>();
        e.fit = fit_from_json(ej.at("fit"));
        e.curve = curve_from_json(ej.at("curve"));
        lib.entries.push_back(std::move(e));
    }
    for (const auto& fj : j.at("failures"))
        lib.failures.emplace_back(fj.at("s").get<double>(), fj.at("reason").get<std::string>());
    return lib;
}

std::string DetectionReport::to_json() const {
    nlohmann::json j;
    j["schema_version"] = "1";
    nlohmann::json mse = nlohmann::json::array();
    for (const auto& [s, m] : mse_by_s) mse.push_back({{"s", s}, {"mse", m}});
    j["mse_by_s"] = mse;
    j["s_hat"] = s_hat;
    j["biased"] = biased;
    j["bias_threshold"] = bias_threshold;
    if (s_true) j["s_true"] = *s_true;
    if (estimation_error) j["estimation_error"] = *estimation_error;
    j["cloud_fit"] = fit_to_json(cloud_fit);
    return j.dump(2);
}

std::string DetectionReport::to_text() const {
    std::string out;
    out += "bias detection report\n";
    out += "---------------------\n";
    char buf[128];
    for (const auto& [s, m] : mse_by_s) {
        std::snprintf(buf, sizeof(buf), "  s=%.2f  mse=%.6g\n", s, m);
        out += buf;
    }
    std::snprintf(buf, sizeof(buf), "estimated sample percentage: %.2f\n", s_hat);
    out += buf;
    std::snprintf(buf, sizeof(buf), "biased: %s (threshold %.2f)\n", biased ? "yes" : "no",
                  bias_threshold);
    out += buf;
    if (s_true) {
        std::snprintf(buf, sizeof(buf), "ground truth s: %.2f (error %.2f)\n", *s_true,
                      estimation_error ? *estimation_error : std::abs(s_hat - *s_true));
        out += buf;
    }
    return out;
}

}  // namespace bdaudit
