#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "reprice/reprice.hpp"

namespace fs = std::filesystem;
using namespace reprice;

namespace {

struct Common {
    std::string config, out;
    long long seed = -1;
    int threads = 0;
    bool check = false;
    bool timing = false;
};

struct CheckFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw internal_error("cannot write " + p.string());
    f << text;
}

std::string rows_csv(const std::vector<ResultRow>& rows) {
    std::string s = std::string(csv_header()) + "\n";
    for (auto& r : rows) s += csv_line(r) + "\n";
    return s;
}

unsigned long long seed_of(const Common& c, const json& j, unsigned long long dflt) {
    if (c.seed >= 0) return (unsigned long long)c.seed;
    return (unsigned long long)cfg::integer_or(j, "seed", "", (long long)dflt);
}

int threads_of(const Common& c) { return c.threads > 0 ? c.threads : default_threads(); }

// {"value": v, "tol": t} or {"min": lo} / {"max": hi}
bool expect_ok(const json& e, double got, const std::string& path, std::string& why) {
    char buf[256];
    if (cfg::has(e, "value")) {
        double v = cfg::num(e, "value", path), t = cfg::num_or(e, "tol", path, 1e-9);
        std::snprintf(buf, sizeof buf, "%.10g vs expected %.10g +- %g", got, v, t);
        why = buf;
        return std::abs(got - v) <= t;
    }
    bool ok = true;
    std::string s;
    if (cfg::has(e, "min")) {
        double lo = cfg::num(e, "min", path);
        ok = ok && got >= lo;
        std::snprintf(buf, sizeof buf, "%.10g >= %.10g", got, lo);
        s += buf;
    }
    if (cfg::has(e, "max")) {
        double hi = cfg::num(e, "max", path);
        ok = ok && got <= hi;
        std::snprintf(buf, sizeof buf, "%s%.10g <= %.10g", s.empty() ? "" : ", ", got, hi);
        s += buf;
    }
    why = s;
    return ok;
}

struct Checks {
    std::vector<std::pair<bool, std::string>> items;
    void add(bool ok, const std::string& what) { items.emplace_back(ok, what); }
    bool all() const {
        for (auto& i : items)
            if (!i.first) return false;
        return true;
    }
    void print() const {
        for (auto& [ok, w] : items) std::printf("check %s  %s\n", ok ? "PASS" : "FAIL", w.c_str());
    }
};

// ------------------------------------------------------------------------------------------------

int cmd_solve(const Common& cm) {
    json j = load_json_file(cm.config);
    fs::create_directories(cm.out);
    RunOptions opt;
    opt.seed = seed_of(cm, j, 12345);
    opt.timing = cm.timing;
    ordered_json report;
    Checks checks;

    if (cfg::has(j, "instance")) {
        ProblemInstance inst = parse_instance(cfg::at(j, "instance", ""), "instance");
        std::vector<std::string> pols = cfg::has(j, "policies") ? parse_policies(j["policies"], "policies")
                                                                : std::vector<std::string>{"fluid", "static_opt", "two_price_opt", "sd_opt"};
        for (auto& p : pols) cfg::with_path("policies", [&] { return policy_rank(p); });
        std::vector<ResultRow> rows(pols.size());
        parallel_for(int(pols.size()), threads_of(cm), [&](int i) { rows[size_t(i)] = run_policy(inst, pols[size_t(i)], opt); });

        double flu = fluid_value(inst);
        std::printf("instance  c=%d lambda=%g d=%g x*=%.6g  g=%s\n", inst.c, inst.lambda, inst.d, inst.xstar,
                    inst.g.describe().c_str());
        std::printf("%-18s %16s %14s %10s  %s\n", "policy", "reward", "loss", "ratio", "method");
        std::printf("%-18s %16.6f %14.6f %10.6f  %s\n", "FLU", flu, 0.0, 1.0, "fluid bound");
        ordered_json jr = ordered_json::array();
        for (auto& r : rows) {
            std::printf("%-18s %16.6f %14.6f %10.6f  %s\n", r.policy.c_str(), r.reward, r.loss, r.ratio, r.method.c_str());
            ordered_json o{{"policy", r.policy}, {"reward", r.reward}, {"loss", r.loss},     {"ratio", r.ratio},
                           {"method", r.method}, {"lower", r.report.lower}, {"upper", r.report.upper}};
            if (r.report.two_price)
                o["policy_detail"] = two_price_to_json(*r.report.two_price);
            else
                o["policy_detail"] = ordered_json{{"type", "vector"}, {"x", r.report.policy.x}};
            if (!r.diagnostics.empty()) o["diagnostics"] = r.diagnostics;
            if (r.policy == "sd_opt" && r.report.certificate) {
                auto chk = verify_dual(*r.report.certificate);
                o["certificate_zeta"] = r.report.certificate->zeta;
                o["certificate_check"] = chk.pass ? "PASS" : "FAIL";
                if (cm.check) checks.add(chk.pass, "sd_opt dual certificate feasible");
                std::printf("%-18s bracket [%.6f, %.6f]\n", "", r.report.lower, r.report.upper);
            }
            jr.push_back(std::move(o));
        }
        report["instance"] = {{"c", inst.c}, {"lambda", inst.lambda}, {"d", inst.d}, {"xstar", inst.xstar}, {"g", inst.g.describe()}};
        report["flu"] = flu;
        report["policies"] = jr;
        write_file(fs::path(cm.out) / "results.csv", rows_csv(rows));

        if (cm.check) {
            std::map<std::string, double> got{{"flu", flu}};
            for (auto& r : rows) got[r.policy] = r.reward;
            static const std::vector<std::string> order{"fluid", "static_opt", "two_price_opt", "sd_opt"};
            std::string prev;
            for (auto& p : order) {
                if (!got.count(p)) continue;
                if (!prev.empty())
                    checks.add(got[prev] <= got[p] + 1e-9 * flu, "ordering " + prev + " <= " + p);
                prev = p;
            }
            if (cfg::has(j, "expect")) {
                for (auto& [k, e] : j["expect"].items()) {
                    std::string path = "expect." + k;
                    if (!got.count(k)) cfg::fail(path, "no such result (policy not run?)");
                    std::string why;
                    bool ok = expect_ok(e, got[k], path, why);
                    checks.add(ok, k + ": " + why);
                }
            }
        }
    }

    if (cfg::has(j, "multiclass")) {
        MultiClassInstance mc = parse_multiclass(j["multiclass"], "multiclass");
        DecomposeOptions dopt;
        dopt.threads = threads_of(cm);
        dopt.two_price.seed = opt.seed;
        Allocation a = decompose_and_price(mc, dopt);
        std::printf("multiclass  FLU=%.6f  total reward=%.6f  loss=%.6f  rounding bound=%.6f  class losses=%.6f\n",
                    a.fluid_objective, a.total_reward, a.loss, a.bound_rounding, a.bound_class_losses);
        for (size_t i = 0; i < a.classes.size(); ++i) {
            auto& r = a.classes[i];
            std::printf("  class %zu  x*=%.6f  c_i=%d  reward=%.6f", i, r.x_star, r.capacity, r.reward);
            if (r.policy) std::printf("  two-price(x_L=%.4f, x_H=%.4f, tau=%d)", r.policy->x_L, r.policy->x_H, r.policy->tau);
            std::printf("%s%s\n", r.note.empty() ? "" : "  ", r.note.c_str());
        }
        report["multiclass"] = allocation_to_json(a);
        if (cm.check) {
            checks.add(a.total_reward <= a.fluid_objective + 1e-9 * (1.0 + a.fluid_objective), "multiclass reward <= FLU(m)");
            checks.add(a.total_reward >= a.fluid_objective - a.bound_rounding - a.bound_class_losses - 1e-9 * (1.0 + a.fluid_objective),
                       "multiclass reward >= FLU(m) - rounding - class losses");
        }
    }
    if (!cfg::has(j, "instance") && !cfg::has(j, "multiclass")) cfg::fail("instance", "missing (or give 'multiclass')");

    write_file(fs::path(cm.out) / "report.json", report.dump(2) + "\n");
    if (cm.check) {
        checks.print();
        if (!checks.all()) throw CheckFailed("solve checks failed");
    }
    return 0;
}

int cmd_scale(const Common& cm) {
    json j = load_json_file(cm.config);
    fs::create_directories(cm.out);
    const json& fam = cfg::at(j, "family", "");
    ScaleSpec spec;
    spec.c0 = int(cfg::integer(fam, "c0", "family"));
    if (spec.c0 < 1) cfg::fail("family.c0", "must be >= 1");
    spec.lambda0 = cfg::num(fam, "lambda0", "family");
    spec.d = cfg::num(fam, "d", "family");
    if (!(spec.lambda0 > 0.0)) cfg::fail("family.lambda0", "must be positive");
    if (!(spec.d > 0.0)) cfg::fail("family.d", "must be positive");
    spec.g = parse_reward(cfg::at(fam, "g", "family"), "family.g");
    spec.group = cfg::str_or(fam, "group", "family", "family");
    if (cfg::has(j, "scales")) spec.scales = cfg::nums(j, "scales", "");
    if (cfg::has(j, "policies")) spec.policies = parse_policies(j["policies"], "policies");
    cfg::with_path("scales", [&] {
        require(spec.scales.size() >= 3, "need at least 3 scale points");
        for (size_t i = 0; i < spec.scales.size(); ++i)
            require(spec.scales[i] > 0.0 && (i == 0 || spec.scales[i] > spec.scales[i - 1]), "scale factors must be positive and increasing");
        return 0;
    });
    for (auto& p : spec.policies) cfg::with_path("policies", [&] { return policy_rank(p); });

    RunOptions opt;
    opt.seed = seed_of(cm, j, 12345);
    opt.timing = cm.timing;
    ScaleResult res = run_scale(spec, opt, threads_of(cm));
    write_file(fs::path(cm.out) / "results.csv", rows_csv(res.rows));

    std::string sl = "policy,slope,intercept,r2,points\n";
    std::printf("%-18s %10s %10s %6s\n", "policy", "slope", "r2", "points");
    for (auto& s : res.slopes) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%s,%.10g,%.10g,%.10g,%d\n", s.policy.c_str(), s.slope, s.intercept, s.r2, s.points);
        sl += buf;
        std::printf("%-18s %10.4f %10.4f %6d\n", s.policy.c_str(), s.slope, s.r2, s.points);
    }
    write_file(fs::path(cm.out) / "slopes.csv", sl);

    // gnuplot script for the log-log loss plot
    std::string gp = "set datafile separator ','\nset logscale xy\nset xlabel 'c'\nset ylabel 'performance loss'\nset key left top\nplot ";
    for (size_t i = 0; i < spec.policies.size(); ++i) {
        if (i) gp += ", \\\n     ";
        gp += "'results.csv' using (strcol(4) eq '" + spec.policies[i] + "' ? $1 : 1/0):6 with linespoints title '" +
              spec.policies[i] + "'";
    }
    write_file(fs::path(cm.out) / "loss.gp", gp + "\n");

    if (cm.check) {
        Checks checks;
        if (cfg::has(j, "expect_slopes"))
            for (auto& [k, e] : j["expect_slopes"].items()) {
                auto it = std::find_if(res.slopes.begin(), res.slopes.end(), [&](auto& s) { return s.policy == k; });
                if (it == res.slopes.end()) cfg::fail("expect_slopes." + k, "policy not run");
                std::string why;
                checks.add(expect_ok(e, it->slope, "expect_slopes." + k, why), k + " slope " + why);
            }
        for (auto& r : res.rows)
            checks.add(r.ratio >= 0.0 && r.ratio <= 1.0 + 1e-9, "ratio in [0,1] for " + r.policy + " c=" + std::to_string(r.c));
        checks.print();
        if (!checks.all()) throw CheckFailed("scale checks failed");
    }
    return 0;
}

int cmd_small_stock(const Common& cm) {
    json j = load_json_file(cm.config);
    fs::create_directories(cm.out);
    SmallStockSpec spec;
    spec.family = cfg::str(j, "family", "");
    cfg::with_path("family", [&] { return random_small_stock_g(spec.family, 1, 0); });
    spec.instances = int(cfg::integer_or(j, "instances", "", 100));
    if (spec.instances < 1) cfg::fail("instances", "must be >= 1");
    if (cfg::has(j, "c")) {
        spec.cs.clear();
        for (double v : cfg::nums(j, "c", "")) {
            if (v < 1 || v != std::floor(v)) cfg::fail("c", "capacities must be positive integers");
            spec.cs.push_back(int(v));
        }
    }
    spec.d = cfg::num_or(j, "d", "", 1.0);
    spec.seed = seed_of(cm, j, 2024);
    RunOptions opt;
    opt.timing = cm.timing;
    SmallStockResult res = run_small_stock(spec, opt, threads_of(cm));
    write_file(fs::path(cm.out) / "results.csv", rows_csv(res.rows));

    static const std::vector<std::string> order{"sd_opt", "two_price_opt", "static_opt", "fluid"};
    std::string sm = "c,policy,mean_ratio\n";
    std::printf("%6s %10s %14s %11s %8s  %s\n", "c", "sd_opt", "two_price_opt", "static_opt", "fluid", "ordering violations");
    for (auto& s : res.summary) {
        std::printf("%6d", s.c);
        for (auto& p : order) {
            std::printf(" %*.4f", p == "two_price_opt" ? 14 : p == "static_opt" ? 11 : p == "fluid" ? 8 : 10, s.mean_ratio[p]);
            char buf[128];
            std::snprintf(buf, sizeof buf, "%d,%s,%.10g\n", s.c, p.c_str(), s.mean_ratio[p]);
            sm += buf;
        }
        std::printf("  %d (worst %.2g)\n", s.ordering_violations, s.worst_ordering_gap);
    }
    write_file(fs::path(cm.out) / "summary.csv", sm);

    if (cm.check) {
        Checks checks;
        for (auto& s : res.summary)
            checks.add(s.ordering_violations == 0, "ordering fluid <= static <= two-price <= sd at c=" + std::to_string(s.c));
        double tol = cfg::num_or(j, "tolerance", "", 0.02);
        if (cfg::has(j, "expect_mean_ratio"))
            for (auto& [ck, e] : j["expect_mean_ratio"].items()) {
                int c = std::atoi(ck.c_str());
                auto it = std::find_if(res.summary.begin(), res.summary.end(), [&](auto& s) { return s.c == c; });
                if (it == res.summary.end()) cfg::fail("expect_mean_ratio." + ck, "capacity not run");
                for (auto& [p, v] : e.items()) {
                    double want = cfg::num(v, "expect_mean_ratio." + ck + "." + p);
                    double got = it->mean_ratio[p];
                    char buf[160];
                    std::snprintf(buf, sizeof buf, "c=%d %s mean ratio %.4f vs %.4f +- %.3f", c, p.c_str(), got, want, tol);
                    checks.add(std::abs(got - want) <= tol, buf);
                }
            }
        checks.print();
        if (!checks.all()) throw CheckFailed("small-stock checks failed");
    }
    return 0;
}

int cmd_certify(const Common& cm) {
    json j = load_json_file(cm.config);
    fs::create_directories(cm.out);
    ProblemInstance inst = parse_instance(cfg::at(j, "instance", ""), "instance");
    const json& list = cfg::at(j, "certificates", "");
    if (!list.is_array() || list.empty()) cfg::fail("certificates", "expected a nonempty array");

    // the stock-dependent optimum every certificate must bound
    auto sd = optimize_stock_dependent(inst);
    std::printf("instance  c=%d lambda=%g d=%g x*=%.6g  SDOPT=%.6f (upper %.6f)\n", inst.c, inst.lambda, inst.d, inst.xstar,
                sd.reward, sd.upper);
    std::printf("%-12s %-18s %16s %14s %14s  %s\n", "kind", "label", "zeta", "max_violation", "zeta-SDOPT", "verdict");

    ordered_json outs = ordered_json::array();
    bool all = true;
    for (size_t i = 0; i < list.size(); ++i) {
        std::string path = cfg::join("certificates", i);
        const json& e = list[i];
        std::string kind = cfg::str(e, "kind", path);
        DualCertificate cert;
        if (kind == "alpha1") {
            cert = cfg::with_path(path, [&] {
                double R, r;
                if (cfg::has(e, "R")) {
                    R = cfg::num(e, "R", path);
                    r = cfg::num(e, "r", path);
                } else {
                    std::tie(R, r) = fit_alpha1(inst);
                }
                return build_dual_alpha1(inst, R, r);
            });
        } else if (kind == "kink") {
            cert = cfg::with_path(path, [&] {
                double eps = cfg::num_or(e, "eps", path, std::min(0.1, 0.5 * std::min(inst.xstar, 1.0 - inst.xstar)));
                ShapeModel sh = classify_shape(inst.g, inst.xstar, eps);
                auto k = build_kink_majorant(inst.g, sh, inst.xstar, cfg::num(e, "eta", path));
                return build_dual_alpha1(inst, k);
            });
        } else if (kind == "alpha_inf") {
            cert = cfg::with_path(path, [&] {
                ThreePiece t = fit_alpha_inf(inst.g);
                return build_dual_alpha_inf(inst, t, alpha_inf_case(t, inst.xstar));
            });
        } else if (kind == "static") {
            cert = cfg::with_path(path, [&] {
                auto [r, b] = fit_static_majorant(inst);
                if (cfg::has(e, "r")) {
                    r = cfg::num(e, "r", path);
                    b = cfg::num(e, "b", path);
                }
                return build_dual_static(inst, r, b, cfg::num(e, "q", path));
            });
        } else if (kind == "lpsd") {
            cert = *sd.certificate;
        } else if (kind == "replay") {
            std::string file = cfg::str(e, "file", path);
            fs::path fp = fs::path(file).is_absolute() ? fs::path(file) : fs::path(cm.config).parent_path() / file;
            json cj = load_json_file(fp.string());
            // certify writes an array; pick one entry
            if (cj.is_array()) {
                long long k = cfg::integer_or(e, "index", path, 0);
                if (k < 0 || k >= (long long)cj.size()) cfg::fail(cfg::join(path, "index"), "out of range");
                cj = cj[size_t(k)];
            }
            cert = certificate_from_json(cj, file);
        } else {
            cfg::fail(cfg::join(path, "kind"), "unknown certificate kind '" + kind + "' (expected alpha1, kink, alpha_inf, static, lpsd, replay)");
        }

        bool ok = true;
        DualCheck chk;
        std::string note;
        try {
            const DualProgram& p = cert.program;
            if (p.c != inst.c || std::abs(p.lambda - inst.lambda) > 1e-12 * inst.lambda || std::abs(p.d - inst.d) > 1e-12 * inst.d)
                throw invalid_input("certificate was built for a different instance");
            double primal = relaxed_optimum(inst, cert);
            chk = verify_dual(cert, primal);
            ok = chk.pass;
            // the relaxations only help if zeta also bounds the true optimum
            if (!cert.program.has_static() && cert.zeta < sd.reward - 1e-6 * cert.program.scale()) {
                ok = false;
                note = "zeta below SDOPT";
            }
        } catch (const invalid_input& ex) {
            ok = false;
            note = ex.what();
        }
        all = all && ok;
        std::printf("%-12s %-18s %16.6f %14.3g %14.6f  %s%s%s\n", kind.c_str(), cert.label.c_str(), cert.zeta, chk.max_violation,
                    cert.zeta - sd.reward, ok ? "PASS" : "FAIL", chk.where.empty() || ok ? "" : ("  at " + chk.where).c_str(),
                    note.empty() ? "" : ("  " + note).c_str());
        ordered_json o = certificate_to_json(cert);
        o["kind"] = kind;
        o["verdict"] = ok ? "PASS" : "FAIL";
        o["max_violation"] = chk.max_violation;
        o["weak_margin"] = std::isnan(chk.weak_margin) ? ordered_json(nullptr) : ordered_json(chk.weak_margin);
        if (!note.empty()) o["note"] = note;
        outs.push_back(std::move(o));
    }
    write_file(fs::path(cm.out) / "certificates.json", outs.dump(1) + "\n");
    if (!all) throw CheckFailed("certificate audit failed");
    return 0;
}

int cmd_simulate(const Common& cm) {
    json j = load_json_file(cm.config);
    fs::create_directories(cm.out);
    ProblemInstance inst = parse_instance(cfg::at(j, "instance", ""), "instance");

    StockDependentPolicy pol;
    const json& pj = cfg::at(j, "policy", "");
    std::string ptype = cfg::str(pj, "type", "policy");
    if (ptype == "fluid") {
        pol = fluid_policy(inst);
    } else if (ptype == "two_price") {
        TwoPricePolicy t{cfg::num(pj, "x_l", "policy"), cfg::num(pj, "x_h", "policy"), int(cfg::integer(pj, "tau", "policy"))};
        pol = t.expand(inst.c);
    } else if (ptype == "sd_opt") {
        pol = optimize_stock_dependent(inst).policy;
    } else if (ptype == "vector") {
        pol = StockDependentPolicy(cfg::nums(pj, "x", "policy"));
    } else {
        cfg::fail("policy.type", "unknown policy type '" + ptype + "' (expected fluid, two_price, sd_opt, vector)");
    }
    cfg::with_path("policy", [&] {
        pol.validate(inst.c);
        return 0;
    });

    const json& dl = cfg::at(j, "durations", "");
    if (!dl.is_array() || dl.empty()) cfg::fail("durations", "expected a nonempty array");
    std::vector<DurationDistribution> durs;
    for (size_t i = 0; i < dl.size(); ++i) durs.push_back(parse_duration(dl[i], cfg::join("durations", i)));

    SimConfig sc;
    sc.seed = seed_of(cm, j, 1);
    sc.horizon = cfg::num_or(j, "horizon", "", 1e5 * inst.d);
    sc.warmup = cfg::num_or(j, "warmup", "", 0.1 * sc.horizon);
    sc.batches = int(cfg::integer_or(j, "batches", "", 20));
    if (!(sc.horizon > sc.warmup)) cfg::fail("horizon", "must exceed warmup");
    if (sc.warmup < 0.0) cfg::fail("warmup", "must be >= 0");
    int reps = int(cfg::integer_or(j, "replications", "", 1));
    if (reps < 1) cfg::fail("replications", "must be >= 1");

    std::string csv = "distribution,seed,horizon,warmup,reward_rate,half_width,analytic_reward,tv,reward_error,events,busy_mean,little_rhs,pass\n";
    bool all = true;
    std::printf("%-26s %6s %14s %10s %10s %10s  %s\n", "distribution", "seed", "reward_rate", "hw", "tv", "rel_err", "verdict");
    for (int r = 0; r < reps; ++r) {
        SimConfig c = sc;
        c.seed = sc.seed + (unsigned long long)r;
        auto rep = insensitivity_test(inst, pol, durs, c, threads_of(cm));
        for (auto& row : rep.rows) {
            all = all && row.pass;
            const char* verdict = row.pass ? "PASS" : row.precondition_violated ? "FAIL (precondition)" : "FAIL";
            std::printf("%-26s %6llu %14.6f %10.4f %10.5f %10.5f  %s%s%s\n", row.distribution.c_str(), c.seed, row.run.reward_rate,
                        row.run.half_width, row.tv, row.reward_error, verdict, row.note.empty() ? "" : "  ",
                        row.note.c_str());
            char buf[512];
            std::snprintf(buf, sizeof buf, "%s,%llu,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%lld,%.12g,%.12g,%d\n",
                          row.distribution.c_str(), c.seed, row.run.horizon, row.run.warmup, row.run.reward_rate,
                          row.run.half_width, rep.analytic_reward, row.tv, row.reward_error, row.run.events, row.run.busy_mean,
                          row.run.little_rhs, row.pass ? 1 : 0);
            csv += buf;
        }
    }
    write_file(fs::path(cm.out) / "simulation.csv", csv);
    std::printf("insensitivity %s\n", all ? "PASS" : "FAIL");
    if (cm.check && !all) throw CheckFailed("insensitivity test failed");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"reprice: admission control for reusable resources"};
    app.require_subcommand(1);
    Common cm;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", cm.config, "JSON config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", cm.out, "output directory")->required();
        sub->add_option("--seed", cm.seed, "override the config seed");
        sub->add_option("--threads", cm.threads, "worker threads (default REPRICE_THREADS or hardware)");
        sub->add_flag("--check", cm.check, "exit 3 when the config's expectations fail");
        sub->add_flag("--timing", cm.timing, "record wall_ms (makes CSV output run-dependent)");
    };
    std::map<std::string, int (*)(const Common&)> cmds{{"solve", cmd_solve},
                                                        {"scale", cmd_scale},
                                                        {"small-stock", cmd_small_stock},
                                                        {"certify", cmd_certify},
                                                        {"simulate", cmd_simulate}};
    static const std::map<std::string, std::string> help{{"solve", "optimize policies on one instance"},
                                                         {"scale", "loss scaling experiment with log-log slopes"},
                                                         {"small-stock", "random small-capacity instances"},
                                                         {"certify", "build and audit dual certificates"},
                                                         {"simulate", "discrete-event simulation and insensitivity test"}};
    for (auto& [name, fn] : cmds) add_common(app.add_subcommand(name, help.at(name)));
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    try {
        for (auto& [name, fn] : cmds)
            if (app.got_subcommand(name)) return fn(cm);
    } catch (const invalid_input& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const CheckFailed& e) {
        std::fprintf(stderr, "check failed: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 1;
    }
    return 0;
}
