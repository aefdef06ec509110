#include "gcl/expcli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include "gcl/observables.hpp"
#include "gcl/propagator.hpp"
#include "gcl/semiclassics.hpp"

#ifndef GCL_VERSION
#define GCL_VERSION "unknown"
#endif

namespace gcl::exp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kPi = std::numbers::pi;

struct ExperimentName {
    Experiment e;
    const char* name;
    const char* variable;
};

constexpr ExperimentName kExperiments[] = {
    {Experiment::Ringdown, "ringdown", "theta"},
    {Experiment::Populations, "populations", "theta"},
    {Experiment::TeffScan, "teff-scan", "theta"},
    {Experiment::LinearResponse, "linear-response", "theta"},
    {Experiment::ResponseMaxima, "response-maxima", "theta"},
    {Experiment::Bistability, "bistability", "omega"},
    {Experiment::Fluctuations, "fluctuations", "detuning_over_U"},
    {Experiment::Parametric, "parametric", "detuning_over_U"},
};

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

double parse_factor(const std::string& key, const std::string& text, const std::string& whole)
{
    std::string t = trim(text);
    double scale = 1.0;
    if (t.size() >= 2 && lower(t.substr(t.size() - 2)) == "pi") {
        scale = kPi;
        t = trim(t.substr(0, t.size() - 2));
        if (!t.empty() && t.back() == '*') t = trim(t.substr(0, t.size() - 1));
        if (t.empty()) return scale;
    }
    double v = 0.0;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    if (!t.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (t.empty() || ec != std::errc() || ptr != last) throw ConfigError(key, "cannot parse number '" + whole + "'");
    return v * scale;
}

Family parse_family_name(const std::string& key, const std::string& s)
{
    const std::string l = lower(s);
    if (l == "cl") return Family::CL;
    if (l == "gcl") return Family::gCL;
    if (l == "lindblad") return Family::Lindblad;
    throw ConfigError(key, "unknown family '" + s + "' (CL, gCL, lindblad or both)");
}

int parse_int(const std::string& key, const std::string& text, int lo)
{
    const double v = parse_number(key, text);
    if (v != std::floor(v) || v < lo || v > 1e9) {
        throw ConfigError(key, "expected an integer >= " + std::to_string(lo) + ", got '" + text + "'");
    }
    return static_cast<int>(v);
}

double positive(const std::string& key, const std::string& text)
{
    const double v = parse_number(key, text);
    if (!(v > 0.0)) throw ConfigError(key, "must be positive, got '" + text + "'");
    return v;
}

double non_negative(const std::string& key, const std::string& text)
{
    const double v = parse_number(key, text);
    if (!(v >= 0.0)) throw ConfigError(key, "must be non-negative, got '" + text + "'");
    return v;
}

void check_theta(const std::string& key, double theta)
{
    if (!(theta >= 0.0 && theta <= kPi / 2.0 + 1e-12)) {
        throw ConfigError(key, "theta must lie in [0, pi/2], got " + std::to_string(theta / kPi) + "pi");
    }
}

std::map<std::string, std::string> read_pairs(std::string_view text)
{
    std::map<std::string, std::string> kv;
    std::string section;
    std::istringstream in{std::string(text)};
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto cut = raw.find_first_of("#;");
        const std::string line = trim(cut == std::string::npos ? raw : raw.substr(0, cut));
        if (line.empty()) continue;
        const std::string where = "line " + std::to_string(lineno);
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError(where, "empty section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where, "expected key = value");
        std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError(where, "missing key");
        if (!section.empty()) key = section + "." + key;
        if (kv.count(key)) throw ConfigError(key, "duplicate key");
        kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

std::vector<double> linspace(double a, double b, int n)
{
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
    return v;
}

std::vector<double> resolve_grid(const std::map<std::string, std::string>& r, const std::string& prefix)
{
    const std::string& values = r.at(prefix + ".values");
    if (!values.empty()) return parse_list(prefix + ".values", values);
    for (const char* k : {".start", ".stop", ".points"}) {
        if (r.at(prefix + k).empty()) throw ConfigError(prefix + k, "missing required field");
    }
    return linspace(parse_number(prefix + ".start", r.at(prefix + ".start")),
                    parse_number(prefix + ".stop", r.at(prefix + ".stop")),
                    parse_int(prefix + ".points", r.at(prefix + ".points"), 1));
}

template <class F>
void parallel_for(int n, int threads, F&& f)
{
    std::atomic<int> next{0};
    auto work = [&] {
        for (int i = next++; i < n; i = next++) f(i);
    };
    const int k = std::min(std::max(threads, 1), n);
    if (k <= 1) {
        work();
        return;
    }
    std::vector<std::thread> pool;
    for (int i = 0; i < k; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
}

// One unit of work; `ok` false means the values are missing or unreliable.
struct Outcome {
    bool ok = true;
    nlohmann::json diag = nlohmann::json::object();
};

template <class F>
Outcome guarded(F&& f)
{
    Outcome o;
    try {
        f(o);
    } catch (const Error& e) {
        o.ok = false;
        o.diag["error"] = std::string(to_string(e.kind())) + ": " + e.what();
    } catch (const std::exception& e) {
        o.ok = false;
        o.diag["error"] = e.what();
    }
    return o;
}

ModelParams params_for(const ExperimentConfig& cfg, Family family)
{
    ModelParams p = cfg.model;
    p.family = family;
    p.dim = cfg.numerics.N;
    return p;
}

SteadyStateOptions steady_options(const Numerics& n)
{
    SteadyStateOptions o;
    o.evolve.steps_per_period = n.steps_per_period;
    o.evolve.max_doublings = n.max_doublings;
    o.evolve.trace_tolerance = n.trace_tolerance;
    o.evolve.positivity_epsilon = n.positivity_epsilon;
    o.residual_tolerance = n.residual_tolerance;
    o.stroboscopic_tolerance = n.stroboscopic_tolerance;
    o.max_time = n.max_time;
    o.snapshots = n.snapshots;
    return o;
}

void record_steady(Outcome& o, const SteadyStateReport& r)
{
    o.diag["converged"] = r.converged;
    o.diag["residual"] = r.residual;
    o.diag["min_eig"] = r.min_eig;
    o.diag["time_used"] = r.time_used;
    o.diag["periods_used"] = r.periods_used;
    o.diag["positivity_worst"] = r.positivity.worst;
    o.diag["positivity_violations"] = r.positivity.violations.size();
    if (!r.converged) o.ok = false;
}

std::string fam_suffix(Family f) { return std::string("_") + family_name(f); }

struct Runner {
    const ExperimentConfig& cfg;
    int threads;
    RunResult out;

    // tasks[i] for control i and family j are at i * F + j
    std::vector<Outcome> run_tasks(int n, const std::function<void(int, Family, Outcome&)>& body)
    {
        const int F = static_cast<int>(cfg.families.size());
        std::vector<Outcome> res(n * F);
        parallel_for(n * F, threads, [&](int k) {
            const Family fam = cfg.families[k % F];
            res[k] = guarded([&](Outcome& o) { body(k / F, fam, o); });
        });
        out.tasks += n * F;
        for (int k = 0; k < n * F; ++k) {
            if (!res[k].ok) ++out.failures;
            res[k].diag["family"] = family_name(cfg.families[k % F]);
        }
        return res;
    }

    void store_diag(const std::vector<Outcome>& res, const std::vector<double>& control)
    {
        const int F = static_cast<int>(cfg.families.size());
        nlohmann::json arr = nlohmann::json::array();
        nlohmann::json events = nlohmann::json::array();
        for (std::size_t k = 0; k < res.size(); ++k) {
            nlohmann::json d = res[k].diag;
            d[cfg.sweep_variable] = control[k / F];
            if (!res[k].ok) events.push_back(d);
            else if (d.contains("positivity_violations") && d["positivity_violations"].get<std::size_t>() > 0)
                events.push_back(d);
            arr.push_back(std::move(d));
        }
        out.diagnostics["points"] = std::move(arr);
        out.diagnostics["events"] = std::move(events);
    }

    double val(const Outcome& o, const char* k) const
    {
        return o.diag.contains(k) && o.diag[k].is_number() ? o.diag[k].get<double>() : kNaN;
    }

    void ringdown();
    void populations();
    void teff_scan();
    void linear_response();
    void response_maxima();
    void bistability();
    void driven_scan(bool parametric);
};

void Runner::ringdown()
{
    const auto& th = cfg.sweep;
    const int F = static_cast<int>(cfg.families.size());
    std::vector<RingdownResult> traces(th.size() * F);
    const auto res = run_tasks(static_cast<int>(th.size()), [&](int i, Family fam, Outcome& o) {
        ModelParams p = params_for(cfg, fam);
        p.theta = th[i];
        double x0 = cfg.x0;
        if (x0 <= 0.0) {
            const double thr = nonlinear_damping_threshold(p);
            x0 = std::isfinite(thr) ? 2.0 * thr : 1.0;
        }
        RingdownOptions opts;
        opts.steps_per_period = cfg.numerics.classical_steps_per_period;
        opts.duration = cfg.duration;
        RingdownResult r = gcl::ringdown(p, x0, fam, opts);
        o.diag["x0"] = x0;
        o.diag["gamma_eff"] = r.gamma_eff;
        o.diag["gamma_linear"] = r.gamma_linear;
        o.diag["initial_rate"] = r.rate_power.empty() ? kNaN : r.rate_power.front();
        o.diag["monotone"] = r.monotone;
        o.diag["max_envelope_rise"] = r.max_envelope_rise;
        int k = 0;
        while (cfg.families[k] != fam) ++k;
        traces[i * F + k] = std::move(r);
    });
    out.table.columns = {"theta", "t"};
    for (Family f : cfg.families) {
        out.table.columns.push_back("x" + fam_suffix(f));
        out.table.columns.push_back("A" + fam_suffix(f));
    }
    for (std::size_t i = 0; i < th.size(); ++i) {
        std::size_t m = std::numeric_limits<std::size_t>::max();
        for (int k = 0; k < F; ++k) m = std::min(m, traces[i * F + k].t.size());
        for (std::size_t s = 0; s < m; ++s) {
            std::vector<double> row{th[i], traces[i * F].t[s]};
            for (int k = 0; k < F; ++k) {
                row.push_back(traces[i * F + k].x[s]);
                row.push_back(traces[i * F + k].envelope[s]);
            }
            out.table.rows.push_back(std::move(row));
        }
    }
    store_diag(res, th);
}

void Runner::populations()
{
    const auto& th = cfg.sweep;
    const int F = static_cast<int>(cfg.families.size());
    std::vector<std::vector<LevelPopulation>> pops(th.size() * F);
    const auto res = run_tasks(static_cast<int>(th.size()), [&](int i, Family fam, Outcome& o) {
        ModelParams p = params_for(cfg, fam);
        p.theta = th[i];
        const SteadyStateReport r = steady_state(p, steady_options(cfg.numerics));
        record_steady(o, r);
        const SystemOperators ops = build_system(p);
        auto lv = gcl::populations(r.rho, ops.h_static, cfg.numerics.guard);
        try {
            const PopulationFit fit = effective_temperature(lv);
            o.diag["T_eff"] = fit.T_eff;
            o.diag["fit_residual"] = fit.fit_residual;
        } catch (const Error& e) {
            o.diag["T_eff_error"] = e.what();
        }
        int k = 0;
        while (cfg.families[k] != fam) ++k;
        pops[i * F + k] = std::move(lv);
    });
    out.table.columns = {"theta", "level", "energy"};
    for (Family f : cfg.families) out.table.columns.push_back("P" + fam_suffix(f));
    for (std::size_t i = 0; i < th.size(); ++i) {
        std::size_t m = std::numeric_limits<std::size_t>::max();
        for (int k = 0; k < F; ++k) m = std::min(m, pops[i * F + k].size());
        for (std::size_t n = 0; n < m; ++n) {
            std::vector<double> row{th[i], static_cast<double>(n), pops[i * F].at(n).energy};
            for (int k = 0; k < F; ++k) row.push_back(pops[i * F + k][n].population);
            out.table.rows.push_back(std::move(row));
        }
    }
    store_diag(res, th);
}

void Runner::teff_scan()
{
    const auto& th = cfg.sweep;
    const auto res = run_tasks(static_cast<int>(th.size()), [&](int i, Family fam, Outcome& o) {
        ModelParams p = params_for(cfg, fam);
        p.theta = th[i];
        const SteadyStateReport r = steady_state(p, steady_options(cfg.numerics));
        record_steady(o, r);
        const SystemOperators ops = build_system(p);
        const auto lv = gcl::populations(r.rho, ops.h_static, cfg.numerics.guard);
        const PopulationFit fit = effective_temperature(lv);
        o.diag["T_eff"] = fit.T_eff;
        o.diag["fit_residual"] = fit.fit_residual;
        o.diag["levels_used"] = fit.levels_used;
    });
    const int F = static_cast<int>(cfg.families.size());
    out.table.columns = {"theta"};
    for (Family f : cfg.families) {
        for (const char* c : {"T_eff", "fit_residual", "min_eig", "converged"}) out.table.columns.push_back(c + fam_suffix(f));
    }
    for (std::size_t i = 0; i < th.size(); ++i) {
        std::vector<double> row{th[i]};
        for (int k = 0; k < F; ++k) {
            const Outcome& o = res[i * F + k];
            row.push_back(val(o, "T_eff"));
            row.push_back(val(o, "fit_residual"));
            row.push_back(val(o, "min_eig"));
            row.push_back(o.diag.value("converged", false) ? 1.0 : 0.0);
        }
        out.table.rows.push_back(std::move(row));
    }
    store_diag(res, th);
}

void Runner::linear_response()
{
    const auto& th = cfg.sweep;
    const int F = static_cast<int>(cfg.families.size());
    const std::size_t G = cfg.grid.size();
    std::vector<ResponsePoint> pts(th.size() * F * G);
    const auto res = run_tasks(static_cast<int>(th.size()), [&](int i, Family fam, Outcome&) {
        int k = 0;
        while (cfg.families[k] != fam) ++k;
        for (std::size_t g = 0; g < G; ++g) {
            ModelParams p = params_for(cfg, fam);
            p.theta = th[i];
            const double w = p.omega0 + cfg.grid[g];
            p.drives = {{cfg.drive_F, w, 1}};
            pts[(i * F + k) * G + g] = gcl::linear_response(p, w, fam);
        }
    });
    out.table.columns = {"theta", "omega", "detuning"};
    for (Family f : cfg.families) {
        out.table.columns.push_back("A" + fam_suffix(f));
        out.table.columns.push_back("delta" + fam_suffix(f));
    }
    for (std::size_t i = 0; i < th.size(); ++i) {
        for (std::size_t g = 0; g < G; ++g) {
            std::vector<double> row{th[i], cfg.model.omega0 + cfg.grid[g], cfg.grid[g]};
            for (int k = 0; k < F; ++k) {
                const bool ok = res[i * F + k].ok;
                const ResponsePoint& r = pts[(i * F + k) * G + g];
                row.push_back(ok ? r.amplitude : kNaN);
                row.push_back(ok ? r.phase : kNaN);
            }
            out.table.rows.push_back(std::move(row));
        }
    }
    store_diag(res, th);
}

void Runner::response_maxima()
{
    const auto& th = cfg.sweep;
    const int F = static_cast<int>(cfg.families.size());
    const auto res = run_tasks(static_cast<int>(th.size()), [&](int i, Family fam, Outcome& o) {
        ModelParams p = params_for(cfg, fam);
        p.theta = th[i];
        p.drives = {{cfg.drive_F, p.omega0, 1}};
        const ResponseMaximum m = response_maximum(p, fam);
        o.diag["A_max"] = m.amplitude;
        o.diag["Delta_max"] = m.detuning;
    });
    out.table.columns = {"theta"};
    for (Family f : cfg.families) {
        out.table.columns.push_back("A_max" + fam_suffix(f));
        out.table.columns.push_back("Delta_max" + fam_suffix(f));
    }
    for (std::size_t i = 0; i < th.size(); ++i) {
        std::vector<double> row{th[i]};
        for (int k = 0; k < F; ++k) {
            row.push_back(val(res[i * F + k], "A_max"));
            row.push_back(val(res[i * F + k], "Delta_max"));
        }
        out.table.rows.push_back(std::move(row));
    }
    store_diag(res, th);
    nlohmann::json minima = nlohmann::json::object();
    for (Family f : cfg.families) {
        ModelParams p = params_for(cfg, f);
        p.drives = {{cfg.drive_F, p.omega0, 1}};
        try {
            minima[family_name(f)] = resonance_minimum_angle(p, f, th.front(), th.back());
        } catch (const Error& e) {
            minima[family_name(f)] = e.what();
        }
    }
    out.diagnostics["resonance_minimum_theta"] = minima;
}

void Runner::bistability()
{
    const auto& om = cfg.sweep;
    const int F = static_cast<int>(cfg.families.size());
    // per family: continuation, forward sweep, backward sweep
    std::vector<Outcome> res(3 * F);
    std::vector<std::vector<SweepPoint>> sweeps(2 * F);
    std::vector<ResponseBranch> branches(F);
    SweepOptions so;
    so.dwell_periods = cfg.numerics.dwell_periods;
    so.average_periods = cfg.numerics.average_periods;
    so.steps_per_period = cfg.numerics.classical_steps_per_period;
    const double lo = *std::min_element(om.begin(), om.end());
    const double hi = *std::max_element(om.begin(), om.end());
    parallel_for(3 * F, threads, [&](int k) {
        const int f = k / 3, job = k % 3;
        const Family fam = cfg.families[f];
        res[k] = guarded([&](Outcome& o) {
            ModelParams p = params_for(cfg, fam);
            p.drives = {{cfg.drive_F, p.omega0, 1}};
            if (job == 0) {
                branches[f] = response_continuation(p, lo, hi, fam);
                o.diag["task"] = "continuation";
                o.diag["arc_points"] = branches[f].points.size();
                nlohmann::json folds = nlohmann::json::array();
                for (const auto& fp : branches[f].folds) folds.push_back({{"omega", fp.omega}, {"amplitude", fp.amplitude}});
                o.diag["folds"] = folds;
                o.diag["log"] = branches[f].log;
            } else {
                const auto dir = job == 1 ? SweepDirection::Forward : SweepDirection::Backward;
                sweeps[2 * f + job - 1] = hysteresis_sweep(p, om, fam, dir, so);
                o.diag["task"] = job == 1 ? "forward sweep" : "backward sweep";
                int unsettled = 0;
                for (const auto& s : sweeps[2 * f + job - 1]) unsettled += s.settled ? 0 : 1;
                o.diag["unsettled_points"] = unsettled;
            }
        });
        res[k].diag["family"] = family_name(fam);
    });
    out.tasks += 3 * F;
    for (const auto& r : res) out.failures += r.ok ? 0 : 1;

    out.table.columns = {"omega"};
    for (Family f : cfg.families) {
        for (const char* c : {"sweep_fwd", "sweep_bwd", "rwa_n", "rwa_A1", "rwa_stable1", "rwa_A2", "rwa_stable2",
                              "rwa_A3", "rwa_stable3"})
            out.table.columns.push_back(c + fam_suffix(f));
    }
    nlohmann::json summary = nlohmann::json::object();
    for (int f = 0; f < F; ++f) summary[family_name(cfg.families[f])] = {{"max_sweep_separation", 0.0}, {"multi_solution_omegas", 0}};
    for (std::size_t i = 0; i < om.size(); ++i) {
        std::vector<double> row{om[i]};
        for (int f = 0; f < F; ++f) {
            const Family fam = cfg.families[f];
            const auto& fw = sweeps[2 * f];
            const auto& bw = sweeps[2 * f + 1];
            const double a_f = fw.size() == om.size() ? fw[i].amplitude : kNaN;
            const double a_b = bw.size() == om.size() ? bw[i].amplitude : kNaN;
            row.push_back(a_f);
            row.push_back(a_b);
            auto& s = summary[family_name(fam)];
            if (std::isfinite(a_f) && std::isfinite(a_b)) {
                const double sep = std::abs(a_f - a_b) / std::max(std::max(a_f, a_b), 1e-300);
                s["max_sweep_separation"] = std::max(s["max_sweep_separation"].get<double>(), sep);
            }
            ModelParams p = params_for(cfg, fam);
            p.drives = {{cfg.drive_F, om[i], 1}};
            std::vector<ResponsePoint> fp;
            try {
                fp = fixed_points_at(om[i], EomCoefficients::from(p, fam));
            } catch (const Error&) {
            }
            row.push_back(static_cast<double>(fp.size()));
            if (fp.size() > 1) s["multi_solution_omegas"] = s["multi_solution_omegas"].get<int>() + 1;
            for (std::size_t j = 0; j < 3; ++j) {
                row.push_back(j < fp.size() ? fp[j].amplitude : kNaN);
                row.push_back(j < fp.size() ? (fp[j].stable ? 1.0 : 0.0) : kNaN);
            }
        }
        out.table.rows.push_back(std::move(row));
    }
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : res) arr.push_back(r.diag);
    out.diagnostics["tasks"] = arr;
    out.diagnostics["summary"] = summary;
}

void Runner::driven_scan(bool parametric)
{
    const auto& d = cfg.sweep;
    const auto res = run_tasks(static_cast<int>(d.size()), [&](int i, Family fam, Outcome& o) {
        ModelParams p = params_for(cfg, fam);
        const double w = p.omega0 + d[i] * p.U;
        if (parametric) p.drives = {{cfg.drive_F2, 2.0 * w, 2}};
        else p.drives = {{cfg.drive_F, w, 1}};
        const SteadyStateReport r = steady_state(p, steady_options(cfg.numerics));
        record_steady(o, r);
        o.diag["omega"] = w;
        const SystemOperators ops = build_system(p);
        std::vector<double> n, R, nu;
        int unphysical = 0;
        for (const auto& rho : r.snapshots) {
            n.push_back(occupation(rho, ops.x, ops.p, p.omega0));
            const CovarianceSummary c = covariance(rho, ops.x, ops.p);
            unphysical += c.physical ? 0 : 1;
            R.push_back(c.R);
            nu.push_back(c.nu_geo);
        }
        o.diag["unphysical_covariances"] = unphysical;
        for (auto [name, v] : {std::pair{"n", &n}, std::pair{"R", &R}, std::pair{"nu_geo", &nu}}) {
            const MicromotionStats s = micromotion_stats(*v);
            o.diag[std::string(name) + "_mean"] = s.mean;
            o.diag[std::string(name) + "_p10"] = s.p10;
            o.diag[std::string(name) + "_p90"] = s.p90;
        }
    });
    const int F = static_cast<int>(cfg.families.size());
    static const char* const cols[] = {"n_mean", "n_p10", "n_p90", "R_mean", "R_p10", "R_p90",
                                       "nu_geo_mean", "nu_geo_p10", "nu_geo_p90", "min_eig"};
    out.table.columns = {"detuning_over_U"};
    for (Family f : cfg.families) {
        for (const char* c : cols) out.table.columns.push_back(c + fam_suffix(f));
        out.table.columns.push_back("converged" + fam_suffix(f));
    }
    for (std::size_t i = 0; i < d.size(); ++i) {
        std::vector<double> row{d[i]};
        for (int k = 0; k < F; ++k) {
            const Outcome& o = res[i * F + k];
            for (const char* c : cols) row.push_back(val(o, c));
            row.push_back(o.diag.value("converged", false) ? 1.0 : 0.0);
        }
        out.table.rows.push_back(std::move(row));
    }
    store_diag(res, d);
}

std::string fmt12(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v == 0.0 ? 0.0 : v);
    return buf;
}

} // namespace

const char* to_string(Experiment e) noexcept
{
    for (const auto& x : kExperiments)
        if (x.e == e) return x.name;
    return "?";
}

const char* sweep_variable(Experiment e) noexcept
{
    for (const auto& x : kExperiments)
        if (x.e == e) return x.variable;
    return "?";
}

const char* family_name(Family f) noexcept
{
    switch (f) {
    case Family::CL: return "CL";
    case Family::gCL: return "gCL";
    case Family::Lindblad: return "lindblad";
    }
    return "?";
}

const std::map<std::string, std::string>& known_keys()
{
    static const std::map<std::string, std::string> keys = {
        {"experiment", ""},
        {"model.omega0", "1"},
        {"model.gamma", "0.2"},
        {"model.theta", "pi/4"},
        {"model.n_th", "0.3"},
        {"model.U", "0"},
        {"model.F_q", ""},
        {"model.F", ""},
        {"model.G", ""},
        {"model.F2", ""},
        {"model.family", "both"},
        {"ringdown.x0", "0"},
        {"ringdown.duration", "0"},
        {"numerics.N", "40"},
        {"numerics.steps_per_period", "200"},
        {"numerics.max_doublings", "3"},
        {"numerics.trace_tolerance", "1e-8"},
        {"numerics.residual_tolerance", "1e-9"},
        {"numerics.stroboscopic_tolerance", "1e-8"},
        {"numerics.max_time", "0"},
        {"numerics.snapshots", "200"},
        {"numerics.positivity_epsilon", "1e-6"},
        {"numerics.guard", "5"},
        {"numerics.dwell_periods", "300"},
        {"numerics.average_periods", "50"},
        {"numerics.classical_steps_per_period", "400"},
        {"sweep.variable", ""},
        {"sweep.start", ""},
        {"sweep.stop", ""},
        {"sweep.points", ""},
        {"sweep.values", ""},
        {"grid.start", ""},
        {"grid.stop", ""},
        {"grid.points", ""},
        {"grid.values", ""},
        {"output.path", "."},
        {"output.name", ""},
        {"output.format", "csv"},
    };
    return keys;
}

const std::map<std::string, std::string>& experiment_defaults(Experiment e)
{
    static const std::map<Experiment, std::map<std::string, std::string>> table = {
        {Experiment::Ringdown,
         {{"model.gamma", "0.2"}, {"model.n_th", "0.3"}, {"model.U", "0"}, {"sweep.values", "0.1pi, 0.25pi, 0.4pi"}}},
        {Experiment::Populations,
         {{"model.gamma", "0.2"}, {"model.n_th", "0.3"}, {"model.U", "0.2"}, {"sweep.values", "0.1pi, 0.25pi, 0.4pi"}}},
        {Experiment::TeffScan,
         {{"model.gamma", "0.2"},
          {"model.n_th", "0.3"},
          {"model.U", "0.2"},
          {"sweep.start", "0.05pi"},
          {"sweep.stop", "0.45pi"},
          {"sweep.points", "9"}}},
        {Experiment::LinearResponse,
         {{"model.gamma", "0.5"},
          {"model.F_q", "0.4"},
          {"model.U", "0"},
          {"sweep.values", "0, pi/8, pi/4, 3pi/8, pi/2"},
          {"grid.start", "-0.9"},
          {"grid.stop", "1.5"},
          {"grid.points", "241"}}},
        {Experiment::ResponseMaxima,
         {{"model.gamma", "0.5"}, {"model.F_q", "0.4"}, {"model.U", "0"}, {"sweep.start", "0"}, {"sweep.stop", "pi/2"},
          {"sweep.points", "41"}}},
        {Experiment::Bistability,
         {{"model.gamma", "0.2"},
          {"model.U", "3/8"},
          {"model.F_q", "0.4"},
          {"model.theta", "0.4pi"},
          {"sweep.start", "0.8"},
          {"sweep.stop", "2.0"},
          {"sweep.points", "61"}}},
        {Experiment::Fluctuations,
         {{"model.gamma", "0.3"},
          {"model.U", "0.2"},
          {"model.F_q", "0.3"},
          {"model.theta", "pi/4"},
          {"model.n_th", "0.3"},
          {"sweep.start", "-1"},
          {"sweep.stop", "5"},
          {"sweep.points", "40"}}},
        {Experiment::Parametric,
         {{"model.gamma", "0.03"},
          {"model.U", "0.2"},
          {"model.G", "0.1"},
          {"model.theta", "pi/4"},
          {"model.n_th", "0.3"},
          {"sweep.start", "-2"},
          {"sweep.stop", "4"},
          {"sweep.points", "40"}}},
    };
    return table.at(e);
}

double parse_number(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    const auto slash = t.find('/');
    if (slash == std::string::npos) return parse_factor(key, t, t);
    const double num = parse_factor(key, t.substr(0, slash), t);
    const double den = parse_factor(key, t.substr(slash + 1), t);
    if (den == 0.0) throw ConfigError(key, "division by zero in '" + t + "'");
    return num / den;
}

std::vector<double> parse_list(const std::string& key, const std::string& text)
{
    std::vector<double> v;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) v.push_back(parse_number(key, item));
    if (v.empty()) throw ConfigError(key, "empty list");
    return v;
}

ExperimentConfig parse_config(std::string_view text, const std::vector<std::string>& overrides)
{
    std::map<std::string, std::string> user = read_pairs(text);
    for (const std::string& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos) throw ConfigError(trim(ov), "override must have the form key=value");
        user[trim(ov.substr(0, eq))] = trim(ov.substr(eq + 1));
    }
    for (const auto& [k, v] : user) {
        if (!known_keys().count(k)) throw ConfigError(k, "unknown key");
    }
    if (!user.count("experiment") || user["experiment"].empty()) throw ConfigError("experiment", "missing required field");

    ExperimentConfig cfg;
    bool found = false;
    for (const auto& x : kExperiments) {
        if (user["experiment"] == x.name) {
            cfg.experiment = x.e;
            found = true;
        }
    }
    if (!found) throw ConfigError("experiment", "unknown experiment '" + user["experiment"] + "'");

    std::map<std::string, std::string> r = known_keys();
    for (const auto& [k, v] : experiment_defaults(cfg.experiment)) r[k] = v;
    // an explicit raw amplitude replaces the rescaled default and vice versa
    for (auto [a, b] : {std::pair{"model.F_q", "model.F"}, std::pair{"model.G", "model.F2"}}) {
        if (user.count(a) && user.count(b) && !user[a].empty() && !user[b].empty()) {
            throw ConfigError(b, std::string("give either ") + a + " or " + b + ", not both");
        }
        if (user.count(b) && !user[b].empty()) r[a] = "";
        if (user.count(a) && !user[a].empty()) r[b] = "";
    }
    // an explicit range replaces a default value list and vice versa
    for (const char* g : {"sweep", "grid"}) {
        const std::string pre(g);
        const bool range = user.count(pre + ".start") || user.count(pre + ".stop") || user.count(pre + ".points");
        if (range && user.count(pre + ".values") && !user[pre + ".values"].empty()) {
            throw ConfigError(pre + ".values", "give either a value list or start/stop/points, not both");
        }
        if (range) r[pre + ".values"] = "";
        if (user.count(pre + ".values") && !user[pre + ".values"].empty()) {
            r[pre + ".start"] = r[pre + ".stop"] = r[pre + ".points"] = "";
        }
    }
    for (const auto& [k, v] : user) r[k] = v;
    // a fixed theta on a theta-swept runner becomes a one-point sweep
    if (std::string(sweep_variable(cfg.experiment)) == "theta" && user.count("model.theta") &&
        !user.count("sweep.values") && !user.count("sweep.start") && !user.count("sweep.stop") &&
        !user.count("sweep.points")) {
        r["sweep.values"] = r["model.theta"];
        r["sweep.start"] = r["sweep.stop"] = r["sweep.points"] = "";
    }

    const Experiment e = cfg.experiment;
    ModelParams& m = cfg.model;
    m.omega0 = positive("model.omega0", r["model.omega0"]);
    m.gamma = non_negative("model.gamma", r["model.gamma"]);
    m.theta = parse_number("model.theta", r["model.theta"]);
    check_theta("model.theta", m.theta);
    m.n_th = non_negative("model.n_th", r["model.n_th"]);
    m.U = parse_number("model.U", r["model.U"]);
    if (!std::isfinite(m.U)) throw ConfigError("model.U", "must be finite");
    if (!r["model.F_q"].empty()) cfg.drive_F = fq_to_F(parse_number("model.F_q", r["model.F_q"]), m.omega0);
    if (!r["model.F"].empty()) cfg.drive_F = parse_number("model.F", r["model.F"]);
    if (!r["model.G"].empty()) cfg.drive_F2 = G_to_F2(parse_number("model.G", r["model.G"]), m.omega0);
    if (!r["model.F2"].empty()) cfg.drive_F2 = parse_number("model.F2", r["model.F2"]);

    const std::string fam = r["model.family"];
    if (lower(fam) == "both") cfg.families = {Family::CL, Family::gCL};
    else cfg.families = {parse_family_name("model.family", fam)};

    cfg.x0 = non_negative("ringdown.x0", r["ringdown.x0"]);
    cfg.duration = non_negative("ringdown.duration", r["ringdown.duration"]);

    Numerics& n = cfg.numerics;
    n.N = parse_int("numerics.N", r["numerics.N"], 2);
    n.steps_per_period = parse_int("numerics.steps_per_period", r["numerics.steps_per_period"], 4);
    n.max_doublings = parse_int("numerics.max_doublings", r["numerics.max_doublings"], 0);
    n.trace_tolerance = positive("numerics.trace_tolerance", r["numerics.trace_tolerance"]);
    n.residual_tolerance = positive("numerics.residual_tolerance", r["numerics.residual_tolerance"]);
    n.stroboscopic_tolerance = positive("numerics.stroboscopic_tolerance", r["numerics.stroboscopic_tolerance"]);
    n.max_time = non_negative("numerics.max_time", r["numerics.max_time"]);
    n.snapshots = parse_int("numerics.snapshots", r["numerics.snapshots"], 1);
    n.positivity_epsilon = non_negative("numerics.positivity_epsilon", r["numerics.positivity_epsilon"]);
    n.guard = parse_int("numerics.guard", r["numerics.guard"], 0);
    n.dwell_periods = parse_int("numerics.dwell_periods", r["numerics.dwell_periods"], 1);
    n.average_periods = parse_int("numerics.average_periods", r["numerics.average_periods"], 1);
    n.classical_steps_per_period =
        parse_int("numerics.classical_steps_per_period", r["numerics.classical_steps_per_period"], 8);
    if (n.classical_steps_per_period % 2) throw ConfigError("numerics.classical_steps_per_period", "must be even");
    if (n.average_periods > n.dwell_periods) {
        throw ConfigError("numerics.average_periods", "must not exceed numerics.dwell_periods");
    }

    cfg.sweep_variable = sweep_variable(e);
    if (!r["sweep.variable"].empty() && r["sweep.variable"] != cfg.sweep_variable) {
        throw ConfigError("sweep.variable", std::string(to_string(e)) + " sweeps " + cfg.sweep_variable);
    }
    r["sweep.variable"] = cfg.sweep_variable;
    cfg.sweep = resolve_grid(r, "sweep");
    if (e == Experiment::LinearResponse) {
        cfg.grid = resolve_grid(r, "grid");
        for (double d : cfg.grid)
            if (!(m.omega0 + d > 0.0)) throw ConfigError("grid.start", "detuning grid must keep omega positive");
    }

    const bool has_lindblad = std::count(cfg.families.begin(), cfg.families.end(), Family::Lindblad) > 0;
    if (cfg.sweep_variable == "theta") {
        for (double t : cfg.sweep) check_theta("sweep.values (theta)", t);
        if (has_lindblad) {
            for (double t : cfg.sweep)
                if (std::abs(t - kLindbladAngle) > kLindbladAngleTolerance)
                    throw ConfigError("sweep.values (theta)", "consistency: the lindblad family requires theta = pi/4");
        }
    } else if (has_lindblad && std::abs(m.theta - kLindbladAngle) > kLindbladAngleTolerance) {
        throw ConfigError("model.theta", "consistency: the lindblad family requires theta = pi/4");
    }

    const bool linear = e == Experiment::LinearResponse || e == Experiment::ResponseMaxima ||
                        e == Experiment::Bistability || e == Experiment::Fluctuations;
    if (linear && r["model.F_q"].empty() && r["model.F"].empty()) throw ConfigError("model.F_q", "missing required field");
    if (e == Experiment::Parametric && r["model.G"].empty() && r["model.F2"].empty()) {
        throw ConfigError("model.G", "missing required field");
    }
    if ((e == Experiment::LinearResponse || e == Experiment::ResponseMaxima) && m.U != 0.0) {
        throw ConfigError("model.U", std::string(to_string(e)) + " requires U = 0");
    }
    if ((e == Experiment::Bistability || e == Experiment::Fluctuations || e == Experiment::Parametric) && !(m.U > 0.0)) {
        throw ConfigError("model.U", std::string(to_string(e)) + " requires U > 0");
    }
    if (e == Experiment::Bistability) {
        if (cfg.drive_F == 0.0) throw ConfigError("model.F_q", "bistability requires a linear drive tone");
        for (double w : cfg.sweep)
            if (!(w > 0.0)) throw ConfigError("sweep.start", "drive frequency must be positive");
    }
    if (e == Experiment::Fluctuations || e == Experiment::Parametric) {
        for (double d : cfg.sweep)
            if (!(m.omega0 + d * m.U > 0.0)) throw ConfigError("sweep.start", "drive frequency must stay positive");
    }
    if (!(m.gamma > 0.0)) throw ConfigError("model.gamma", "must be positive");
    if (e == Experiment::Populations || e == Experiment::TeffScan) {
        if (n.N - n.guard < 3) throw ConfigError("numerics.guard", "leaves fewer than three levels below the cut");
    }

    if (r["output.format"] != "csv") throw ConfigError("output.format", "only csv is supported");
    cfg.out_dir = r["output.path"].empty() ? "." : r["output.path"];
    cfg.out_name = r["output.name"].empty() ? std::string(to_string(e)) : r["output.name"];
    r["output.name"] = cfg.out_name;
    cfg.model.dim = n.N;
    cfg.resolved = std::move(r);
    return cfg;
}

RunResult run_experiment(const ExperimentConfig& cfg, int threads)
{
    Runner run{cfg, threads, {}};
    switch (cfg.experiment) {
    case Experiment::Ringdown: run.ringdown(); break;
    case Experiment::Populations: run.populations(); break;
    case Experiment::TeffScan: run.teff_scan(); break;
    case Experiment::LinearResponse: run.linear_response(); break;
    case Experiment::ResponseMaxima: run.response_maxima(); break;
    case Experiment::Bistability: run.bistability(); break;
    case Experiment::Fluctuations: run.driven_scan(false); break;
    case Experiment::Parametric: run.driven_scan(true); break;
    }
    return std::move(run.out);
}

std::string format_csv(const ExperimentConfig& cfg, const Table& table)
{
    std::string s = "# gcl-sim " GCL_VERSION "\n";
    for (const auto& [k, v] : cfg.resolved) {
        if (!v.empty() && k != "output.path") s += "# " + k + " = " + v + "\n";
    }
    for (std::size_t i = 0; i < table.columns.size(); ++i) s += (i ? "," : "") + table.columns[i];
    s += "\n";
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) s += ',';
            s += fmt12(row[i]);
        }
        s += '\n';
    }
    return s;
}

nlohmann::json metadata(const ExperimentConfig& cfg, const RunResult& result, double wall_seconds)
{
    nlohmann::json j;
    j["schema_version"] = 1;
    j["generator"] = "gcl-sim";
    j["version"] = GCL_VERSION;
    j["experiment"] = to_string(cfg.experiment);
    j["config"] = cfg.resolved;
    nlohmann::json fams = nlohmann::json::array();
    for (Family f : cfg.families) fams.push_back(family_name(f));
    j["families"] = fams;
    j["sweep"] = {{"variable", cfg.sweep_variable}, {"values", cfg.sweep}};
    nlohmann::json conv = {{"units", "hbar = m = 1"},
                           {"linear_drive", "F = 2 sqrt(2 omega0) F_q"},
                           {"detuning", "Delta = omega - omega0"}};
    if (cfg.experiment == Experiment::Parametric) {
        conv["two_photon_drive"] = "V2 = F2 cos(2 omega t) x^2 with G = F2/(2 omega0) (assumed mapping)";
        conv["F2"] = cfg.drive_F2;
    }
    if (cfg.experiment == Experiment::Fluctuations || cfg.experiment == Experiment::Parametric) {
        conv["control"] = "omega = omega0 + (Delta/U) U";
    }
    j["conventions"] = conv;
    j["columns"] = result.table.columns;
    j["rows"] = result.table.rows.size();
    j["wall_clock_seconds"] = wall_seconds;
    j["tasks"] = result.tasks;
    j["failures"] = result.failures;
    j["status"] = result.failures == 0 ? "complete" : (result.failures == result.tasks ? "failed" : "partial");
    j["diagnostics"] = result.diagnostics;
    return j;
}

int exit_code(const RunResult& result)
{
    if (result.failures == 0) return 0;
    return result.failures >= result.tasks ? 3 : 4;
}

std::string write_outputs(const ExperimentConfig& cfg, const RunResult& result, double wall_seconds)
{
    namespace fs = std::filesystem;
    const fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    const fs::path csv = dir / (cfg.out_name + ".csv");
    const fs::path meta = dir / (cfg.out_name + ".json");
    {
        std::ofstream f(csv, std::ios::binary);
        f << format_csv(cfg, result.table);
        if (!f) throw Error(ErrorKind::Config, "cannot write " + csv.string());
    }
    {
        std::ofstream f(meta, std::ios::binary);
        f << metadata(cfg, result, wall_seconds).dump(2) << '\n';
        if (!f) throw Error(ErrorKind::Config, "cannot write " + meta.string());
    }
    return csv.string();
}

} // namespace gcl::exp
