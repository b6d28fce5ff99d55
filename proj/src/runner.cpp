#include "expile/runner.hpp"

#include "expile/csv.hpp"
#include "expile/empirics.hpp"
#include "expile/examples.hpp"
#include "expile/limit.hpp"
#include "expile/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>

namespace expile {

namespace {

CheckResult gate(const std::string& name, double value, double expected, double tol,
                 const std::string& note = "") {
    CheckResult c;
    c.name = name;
    c.value = value;
    c.expected = expected;
    c.tolerance = tol;
    c.pass = std::fabs(value - expected) <= tol;
    c.note = note;
    return c;
}

void add(RunResult& r, CheckResult c) {
    r.all_pass = r.all_pass && c.pass;
    r.checks.push_back(std::move(c));
}

void write_artifact(RunResult& r, const std::string& dir, const std::string& name,
                    const CsvWriter& csv) {
    std::string path = dir + "/" + name;
    csv.write_file(path);
    r.artifacts.push_back(path);
}

long long default_run_gap(const MaximalSetSpec& spec, long long n) {
    if (spec.mode == SetMode::Countable) return countable_truncation(n);
    if (spec.mode == SetMode::Periodic) return spec.period + 1;
    long long mx = 1;
    for (const auto& b : spec.balls) mx = std::max(mx, b.m);
    return mx;
}

long long pick(long long configured, long long fallback) {
    return configured > 0 ? configured : fallback;
}

// ---- piling-law ----

void run_piling_law(const ExperimentConfig& cfg, const MaximalSetSpec& spec, RunResult& r) {
    PilingLaw law = build_piling_law(spec);
    std::ofstream out(cfg.output_dir + "/law.csv", std::ios::binary);
    if (!out) throw SpecError("cannot write " + cfg.output_dir + "/law.csv");
    out << law_to_csv(law);
    out.close();
    r.artifacts.push_back(cfg.output_dir + "/law.csv");

    Quad mass(0);
    for (const auto& b : law.branches) mass += b.probability;
    add(r, gate("branch-mass", mass.to_double(), 1.0, 0.0,
                law.mode_tag + ", " + std::to_string(law.branches.size()) + " branches, mass " +
                    mass.str()));
}

// ---- extremal-index ----

void run_extremal_index(const ExperimentConfig& cfg, const MaximalSetSpec& spec, RunResult& r) {
    long long n = pick(cfg.n, 10000);
    long long q_n = pick(cfg.q_n, default_run_gap(spec, n));

    std::string exact_note;
    double exact;
    if (spec.mode == SetMode::Countable) {
        exact = theoretical_extremal_index(spec, q_n);
        exact_note = "exact " + fmt_double(exact);
    } else {
        Quad q = theoretical_extremal_index_exact(spec, q_n);
        exact = q.to_double();
        exact_note = "exact " + q.str();
    }

    EIConfig ec;
    ec.n = n;
    ec.tau = cfg.tau > 0 ? cfg.tau : 1.0;
    ec.starts = pick(cfg.trials, 100000000);
    ec.q_n = q_n;
    ec.seed = cfg.seed;
    ec.threads = cfg.threads;
    EIEstimate est = estimate_extremal_index(spec, ec);

    CsvWriter csv({"example", "n", "q_n", "starts", "hits", "clean", "theta_exact", "theta_hat",
                   "se"});
    csv.append_row({spec.name, std::to_string(n), std::to_string(q_n),
                    std::to_string(est.starts), std::to_string(est.hits),
                    std::to_string(est.clean), fmt_double(exact), fmt_double(est.theta_hat),
                    fmt_double(est.se)});
    write_artifact(r, cfg.output_dir, "extremal_index.csv", csv);

    double tol = std::max(0.02, 3 * est.se);
    add(r, gate("ei-estimate", est.theta_hat, exact, tol, exact_note));
}

// ---- empirical-piling ----

// positive-offset entry coefficients are U-free in 1D, so the window ratios
// reproduce them deterministically
std::map<std::pair<int, long long>, Quad> table_ratios(const PilingLaw& law) {
    std::map<std::pair<int, long long>, Quad> out;
    if (law.spec.dim() != 1) return out;
    for (const auto& b : law.branches)
        for (const auto& e : b.entries)
            if (e.offset > 0)
                out.emplace(std::make_pair(b.anchor, e.offset),
                            e.factor * Quad(e.deriv.factor[0]));
    return out;
}

void run_empirical_piling(const ExperimentConfig& cfg, const MaximalSetSpec& spec, RunResult& r) {
    PilingLaw law = build_piling_law(spec);
    PilingStatsConfig pc;
    pc.n = pick(cfg.n, 10000);
    pc.tau = cfg.tau > 0 ? cfg.tau : 10.0;
    pc.clusters = pick(cfg.clusters, 100000);
    pc.q_n = pick(cfg.q_n, default_run_gap(spec, pc.n));
    pc.seed = cfg.seed;
    pc.use_palm = pc.n >= 100000;   // full scans get infeasible once mu(U_n) ~ 1/n
    if (pc.use_palm) pc.tau = cfg.tau > 0 ? cfg.tau : 1.0;
    PilingStats st = empirical_piling_stats(spec, law, pc);

    CsvWriter anchors({"anchor", "count", "freq", "weight", "weight_exact"});
    for (size_t i = 0; i < st.anchor_counts.size(); ++i) {
        double freq = (double)st.anchor_counts[i] / (double)st.clusters;
        anchors.append_row({std::to_string(i), std::to_string(st.anchor_counts[i]),
                            fmt_double(freq), fmt_double(law.weights[i].to_double()),
                            law.weights[i].str()});
        double p = law.weights[i].to_double();
        double se = std::sqrt(std::max(p * (1 - p), 1e-12) / (double)st.clusters);
        add(r, gate("anchor-freq-" + std::to_string(i), freq, p, 3 * se,
                    std::to_string(st.anchor_counts[i]) + "/" + std::to_string(st.clusters)));
    }
    write_artifact(r, cfg.output_dir, "anchors.csv", anchors);

    CsvWriter branches({"branch", "anchor", "case", "u_lo", "u_hi", "probability", "count",
                        "freq", "retained"});
    for (size_t b = 0; b < law.branches.size(); ++b) {
        const auto& br = law.branches[b];
        double freq = (double)st.branch_counts[b] / (double)st.clusters;
        branches.append_row({std::to_string(b), std::to_string(br.anchor),
                             branch_case_name(br.branch_case), br.u_lo.str(), br.u_hi.str(),
                             br.probability.str(), std::to_string(st.branch_counts[b]),
                             fmt_double(freq), std::to_string(st.branch_retained[b])});
        double p = br.probability.to_double();
        double se = std::sqrt(std::max(p * (1 - p), 1e-12) / (double)st.clusters);
        add(r, gate("branch-freq-" + std::to_string(b), freq, p, 3 * se,
                    "anchor " + std::to_string(br.anchor) + " case " +
                        branch_case_name(br.branch_case)));
    }
    write_artifact(r, cfg.output_dir, "branches.csv", branches);

    auto table = table_ratios(law);
    CsvWriter ratios({"anchor", "offset", "count", "mean_ratio", "table_ratio"});
    for (const auto& cell : st.ratios) {
        auto it = table.find({cell.anchor, cell.offset});
        std::string tab = it == table.end() ? "" : it->second.str();
        ratios.append_row({std::to_string(cell.anchor), std::to_string(cell.offset),
                           std::to_string(cell.count), fmt_double(cell.mean), tab});
        if (it != table.end() && cell.count >= 1000) {
            double t = it->second.to_double();
            add(r, gate("ratio-a" + std::to_string(cell.anchor) + "-off" +
                            std::to_string(cell.offset),
                        cell.mean, t, 0.01 * t, "table " + it->second.str()));
        }
    }
    write_artifact(r, cfg.output_dir, "ratios.csv", ratios);

    if (st.discarded > 0)
        add(r, gate("discard-fraction", (double)st.discarded / (double)st.clusters, 0.0, 1.0,
                    "windows with off-branch negative-offset exceedances (diagnostic)"));
}

// ---- tail ----

void run_tail(const ExperimentConfig& cfg, const MaximalSetSpec& spec, RunResult& r) {
    std::vector<long long> levels;
    if (cfg.n > 0) levels = {cfg.n};
    else levels = {1000, 10000};

    CsvWriter csv({"n", "a_n_scale", "y", "n_p_hat", "target", "rel_err"});
    for (long long n : levels) {
        TailConfig tc;
        tc.n = n;
        tc.samples = pick(cfg.trials, 10000000);
        tc.seed = cfg.seed;
        tc.threads = cfg.threads;
        auto rows = tail_check(spec, tc);
        for (const auto& row : rows) {
            csv.append_row({std::to_string(n), "1", fmt_double(row.y), fmt_double(row.n_p_hat),
                            fmt_double(row.target), fmt_double(row.rel_err)});
            add(r, gate("tail-n" + std::to_string(n) + "-y" + fmt_double(row.y), row.rel_err,
                        0.0, 0.05, "n_p_hat " + fmt_double(row.n_p_hat)));
        }
    }

    // the 2D specimen has a second normalization candidate in circulation;
    // the same estimator rejects it by a wide margin
    if (spec.name == "ex-3-10") {
        TailConfig tc;
        tc.n = levels.front();
        tc.samples = pick(cfg.trials, 10000000);
        tc.a_n_scale = 1.0 / 256.0;
        tc.seed = cfg.seed;
        tc.threads = cfg.threads;
        auto rows = tail_check(spec, tc);
        double min_err = INFINITY;
        for (const auto& row : rows) {
            csv.append_row({std::to_string(tc.n), "1/256", fmt_double(row.y),
                            fmt_double(row.n_p_hat), fmt_double(row.target),
                            fmt_double(row.rel_err)});
            min_err = std::min(min_err, row.rel_err);
        }
        CheckResult c;
        c.name = "a-n-resolution";
        c.value = min_err;
        c.expected = 15.0;      // the rejected candidate inflates n_p_hat 16x
        c.tolerance = 10.0;
        c.pass = min_err > 1.0;
        c.note = "scaled candidate rejected; default scale accepted above";
        add(r, std::move(c));
    }
    write_artifact(r, cfg.output_dir, "tail.csv", csv);
}

// ---- functional-limit ----

void run_functional_limit(const ExperimentConfig& cfg, const MaximalSetSpec& spec, RunResult& r) {
    PilingLaw law = build_piling_law(spec);
    long long n = pick(cfg.n, 100000);
    long long q_n = pick(cfg.q_n, default_run_gap(spec, n));
    double theta = theoretical_extremal_index(spec, q_n);
    double eps = cfg.eps > 0 ? cfg.eps : 1e-3;
    double alpha_tail = spec.alpha_d().to_double();
    const uint64_t levy_seed = cfg.seed + 0x517cc1b727220a95ULL;

    // one truncated series: path and leading excursions
    {
        Rng rng(levy_seed, 0);
        LevySeries s = sample_levy(law, theta, eps, rng);
        CsvWriter path({"t", "v_x", "v_y"});
        Pt v{0, 0};
        path.append_row({"0", "0", "0"});
        for (const auto& a : s.atoms) {
            v[0] += a.jump[0];
            v[1] += a.jump[1];
            path.append_row({fmt_double(a.T), fmt_double(v[0]), fmt_double(v[1])});
        }
        write_artifact(r, cfg.output_dir, "levy_path.csv", path);

        CsvWriter exc({"atom", "s", "e_x", "e_y"});
        size_t show = std::min<size_t>(8, s.atoms.size());
        for (size_t a = 0; a < show; ++a)
            for (int k = 0; k <= 20; ++k) {
                Pt e = evaluate_excursion(s, a, k / 20.0);
                exc.append_row({std::to_string(a), fmt_double(k / 20.0), fmt_double(e[0]),
                                fmt_double(e[1])});
            }
        write_artifact(r, cfg.output_dir, "excursions.csv", exc);
    }

    // endpoint identities, exact, over a batch of series
    {
        long long bad = 0, atoms = 0;
        for (uint64_t st = 0; st < 32; ++st) {
            Rng rng(levy_seed, 1000 + st);
            LevySeries s = sample_levy(law, theta, eps, rng);
            for (size_t a = 0; a < s.atoms.size(); ++a) {
                double t = s.atoms[a].T;
                Pt left = evaluate_V(s, std::max(0.0, std::nextafter(t, -1.0)));
                Pt right = evaluate_V(s, t);
                Pt e0 = evaluate_excursion(s, a, 0.0);
                Pt e1 = evaluate_excursion(s, a, 1.0);
                if (e0[0] != left[0] || e0[1] != left[1] || e1[0] != right[0] ||
                    e1[1] != right[1])
                    ++bad;
                ++atoms;
            }
        }
        add(r, gate("endpoint-identities", (double)bad, 0.0, 0.0,
                    std::to_string(atoms) + " atoms checked exactly"));
    }

    // truncation coupling on shared streams
    {
        double worst = 0;
        for (uint64_t st = 0; st < 64; ++st) {
            Rng r1(levy_seed, 2000 + st), r2(levy_seed, 2000 + st);
            LevySeries a = sample_levy(law, theta, eps, r1);
            LevySeries b = sample_levy(law, theta, eps / 2, r2);
            Pt va = evaluate_V(a, 1.0), vb = evaluate_V(b, 1.0);
            worst = std::max(worst, std::hypot(va[0] - vb[0], va[1] - vb[1]));
        }
        add(r, gate("coupling", worst, 0.0, eps, "max |V_eps(1)-V_eps/2(1)| over 64 streams"));
    }

    // mean jump counts; consecutive ratios follow the tail power
    {
        long long series = pick(cfg.clusters, 10000);
        std::vector<double> grid{1.0, 4.0, 16.0};
        auto counts = mean_jump_counts(law, theta, 0.1, series, grid, levy_seed + 1,
                                       cfg.threads);
        CsvWriter jc({"x", "mean_count"});
        for (size_t i = 0; i < grid.size(); ++i)
            jc.append_row({fmt_double(grid[i]), fmt_double(counts[i])});
        write_artifact(r, cfg.output_dir, "jump_counts.csv", jc);
        for (size_t i = 0; i + 1 < grid.size(); ++i) {
            double want = std::pow(grid[i + 1] / grid[i], alpha_tail);
            double got = counts[i] / counts[i + 1];
            add(r, gate("jump-scaling-" + fmt_double(grid[i]) + "-" + fmt_double(grid[i + 1]),
                        got / want, 1.0, 0.10,
                        "counts " + fmt_double(counts[i]) + " vs " + fmt_double(counts[i + 1])));
        }
    }

    // marginal comparison at t = 1: dynamics vs limit sampler
    {
        long long paths = pick(cfg.trials, 2000);
        std::vector<double> sn =
            partial_sum_endpoints(spec, n, 1.0, paths, cfg.seed, cfg.threads);

        struct Acc {
            std::vector<double> vals;
        };
        Acc vsamp = block_reduce<Acc>(
            std::min<long long>(256, paths), cfg.threads,
            [&](long long b) {
                Acc acc;
                long long per = (paths + 255) / 256;
                long long lo = b * per, hi = std::min(paths, lo + per);
                for (long long p = lo; p < hi; ++p) {
                    Rng rng(levy_seed, 3000 + (uint64_t)p);
                    LevySeries s = sample_levy(law, theta, eps, rng);
                    acc.vals.push_back(evaluate_V(s, 1.0)[0]);
                }
                return acc;
            },
            [](Acc& t, const Acc& p) {
                t.vals.insert(t.vals.end(), p.vals.begin(), p.vals.end());
            });

        // one sample path of the scaled partial sums for plotting
        std::vector<double> tgrid;
        for (int k = 0; k <= 100; ++k) tgrid.push_back(k / 100.0);
        PartialSumPath sp = simulate_partial_sum(spec, n, tgrid, cfg.seed, 0);
        CsvWriter snp({"t", "s_x", "s_y"});
        for (size_t k = 0; k < tgrid.size(); ++k)
            snp.append_row({fmt_double(sp.times[k]), fmt_double(sp.values[k][0]),
                            fmt_double(sp.values[k][1])});
        write_artifact(r, cfg.output_dir, "sn_path.csv", snp);

        MarginalComparison mc = compare_marginals(sn, vsamp.vals);
        CsvWriter ks({"n_a", "n_b", "ks", "critical_1pct"});
        ks.append_row({std::to_string(mc.n_a), std::to_string(mc.n_b), fmt_double(mc.ks),
                       fmt_double(mc.critical_1pct)});
        write_artifact(r, cfg.output_dir, "ks.csv", ks);
        add(r, gate("ks-sn-vs-limit", mc.ks, 0.0, 0.08,
                    "n = " + std::to_string(n) + ", " + std::to_string(paths) + " paths"));
    }
}

// ---- dependence-bounds ----

void run_dependence(const ExperimentConfig& cfg, RunResult& r) {
    long long top = pick(cfg.n, 1000000);
    std::vector<long long> grid;
    for (long long n = 10; n <= top; n *= 10) grid.push_back(n);
    const double rho = 1.0 / 3.0;   // transfer-operator decay rate of the examples
    DependenceReport rep = dependence_bound_report(grid, rho);

    CsvWriter csv({"n", "N", "variation_bound", "block_bound"});
    for (const auto& row : rep.rows)
        csv.append_row({std::to_string(row.n), std::to_string(row.N),
                        fmt_double(row.variation_bound), fmt_double(row.block_bound)});
    write_artifact(r, cfg.output_dir, "dependence.csv", csv);

    add(r, gate("dependence-decays", rep.decays ? 1.0 : 0.0, 1.0, 0.0,
                "variation bound monotone; block bound envelope decreasing"));
    if (grid.size() >= 4) {
        double b3 = rep.rows[2].block_bound, b6 = rep.rows.back().block_bound;
        add(r, gate("block-bound-drops", b6 < b3 ? 1.0 : 0.0, 1.0, 0.0,
                    fmt_double(b6) + " < " + fmt_double(b3)));
    }
}

} // namespace

std::string summary_csv(const RunResult& r) {
    CsvWriter csv({"check", "value", "expected", "tolerance", "pass", "note"});
    for (const auto& c : r.checks)
        csv.append_row({c.name, fmt_double(c.value), fmt_double(c.expected),
                        fmt_double(c.tolerance), c.pass ? "1" : "0", c.note});
    return csv.text();
}

RunResult run_experiment(const ExperimentConfig& cfg) {
    std::filesystem::create_directories(cfg.output_dir);
    MaximalSetSpec spec = resolve_spec(cfg);
    RunResult r;

    if (cfg.kind == "piling-law") run_piling_law(cfg, spec, r);
    else if (cfg.kind == "extremal-index") run_extremal_index(cfg, spec, r);
    else if (cfg.kind == "empirical-piling") run_empirical_piling(cfg, spec, r);
    else if (cfg.kind == "tail") run_tail(cfg, spec, r);
    else if (cfg.kind == "functional-limit") run_functional_limit(cfg, spec, r);
    else if (cfg.kind == "dependence-bounds") run_dependence(cfg, r);
    else throw SpecError("unknown experiment kind '" + cfg.kind + "'");

    std::string path = cfg.output_dir + "/summary.csv";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SpecError("cannot write " + path);
    out << summary_csv(r);
    out.close();
    r.artifacts.push_back(path);
    return r;
}

} // namespace expile
