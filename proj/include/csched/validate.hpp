#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "csched/analysis.hpp"
#include "csched/experiment.hpp"
#include "csched/fairness.hpp"
#include "csched/montecarlo.hpp"

namespace csched {

struct CheckResult {
    int criterion = 0;
    std::string name;
    bool passed = false;
    std::string detail;
    double elapsed_ms = 0.0;
};

struct ValidateOptions {
    bool quick = false;  // 10x smaller slot budgets, proportionally wider bands
    std::uint64_t seed = 0xacce55ULL;
    int threads = 0;     // 0 -> hardware concurrency
    std::string work_dir = "validate_out";
};

namespace detail {

class CheckRecorder {
  public:
    explicit CheckRecorder(std::vector<CheckResult>& sink) : sink_(sink) {}

    void run(int criterion, const std::string& name,
             const std::function<std::pair<bool, std::string>()>& body) {
        CheckResult r;
        r.criterion = criterion;
        r.name = name;
        const auto start = std::chrono::steady_clock::now();
        try {
            auto [ok, detail] = body();
            r.passed = ok;
            r.detail = std::move(detail);
        } catch (const std::exception& e) {
            r.passed = false;
            r.detail = std::string("exception: ") + e.what();
        }
        r.elapsed_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                .count();
        sink_.push_back(std::move(r));
    }

  private:
    std::vector<CheckResult>& sink_;
};

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace detail

// Runs every acceptance criterion with fixed seeds and pinned tolerances.
// Monte Carlo bands are 3 standard errors computed from the actual run, so
// the quick mode keeps the same confidence while using smaller budgets.
inline std::vector<CheckResult> validate_suite(const ValidateOptions& options = {}) {
    std::vector<CheckResult> results;
    detail::CheckRecorder rec(results);
    const std::uint64_t seed = options.seed;
    const double budget_scale = options.quick ? 0.1 : 1.0;
    const auto slots = [&](double full) {
        return static_cast<std::uint64_t>(full * budget_scale);
    };
    const int threads = ExperimentOptions{.threads = options.threads}.effective_threads();

    const RateFunction shannon = RateFunction::shannon();

    // Shared CS-FR overhead runs for criteria 1 and 2.
    struct OverheadPoint {
        int n;
        double mu_expected;
        double mu_mc;
        double mu_se;
    };
    std::vector<OverheadPoint> overhead;
    const auto ensure_overhead = [&] {
        if (!overhead.empty()) return;
        for (const int n : {5, 10, 100}) {
            std::vector<UserSpec> users;
            for (int i = 0; i < n; ++i)
                users.push_back({i, 1.0, ChannelModel::rayleigh(1.0), shannon});
            SimConfig cfg;
            cfg.users = users;
            cfg.policy.kind = PolicyKind::CSFR;
            cfg.policy.nfb_probability = 0.02;
            cfg.num_replicas = 4;
            cfg.num_slots = slots(1e6) / 4;
            cfg.threads = threads;
            cfg.master_seed = stream_seed(seed, 0x100 + n);
            cfg.reservoir_capacity = 4;
            const MetricsReport rep = run(cfg);
            overhead.push_back({n, n * (1.0 - std::pow(0.02, 1.0 / n)),
                                rep.mean_feedback_per_slot, rep.mean_feedback_stderr});
        }
    };

    rec.run(1, "feedback-overhead values (p=0.02; n=5,10,100; -ln p)", [&] {
        ensure_overhead();
        const double expected[3] = {2.71, 3.24, 3.84};
        bool ok = std::fabs(-std::log(0.02) - 3.91) < 0.005;
        std::ostringstream detail;
        for (int i = 0; i < 3; ++i) {
            const auto& pt = overhead[static_cast<std::size_t>(i)];
            ok = ok && std::fabs(pt.mu_expected - expected[i]) < 0.005;
            ok = ok && std::fabs(pt.mu_mc - pt.mu_expected) <= 3.0 * pt.mu_se;
            detail << "n=" << pt.n << " mu=" << detail::fmt(pt.mu_expected)
                   << " mc=" << detail::fmt(pt.mu_mc) << "  ";
        }
        detail << "-ln(p)=" << detail::fmt(-std::log(0.02));
        return std::make_pair(ok, detail.str());
    });

    rec.run(2, "feedback ratios (54.3%, 32.4%, 3.8%)", [&] {
        ensure_overhead();
        const double expected[3] = {0.543, 0.324, 0.038};
        bool ok = true;
        std::ostringstream detail;
        for (int i = 0; i < 3; ++i) {
            const auto& pt = overhead[static_cast<std::size_t>(i)];
            const double ratio = pt.mu_expected / pt.n;
            ok = ok && std::fabs(ratio - expected[i]) < 0.0005;
            ok = ok && std::fabs(pt.mu_mc / pt.n - ratio) <= 3.0 * pt.mu_se / pt.n;
            detail << "n=" << pt.n << " ratio=" << detail::fmt(100.0 * ratio) << "%  ";
        }
        return std::make_pair(ok, detail.str());
    });

    rec.run(3, "closed form vs u-space quadrature (< 1e-6 relative)", [&] {
        double worst = 0.0;
        for (const int m : {1, 2, 4})
            for (const double mean : {1.0, 10.0})
                for (const int k : {1, 2, 5, 10})
                    for (const double x : {0.0, 0.2, 0.5, 0.9}) {
                        const ChannelModel ch = ChannelModel::nakagami(m, mean);
                        const double closed = s_nakagami_closed(ch, x, k);
                        const double quad = s_universal(ch, shannon, x, 1.0 / k);
                        worst = std::max(worst, std::fabs(closed - quad) / quad);
                    }
        return std::make_pair(worst < 1e-6, "max relative gap " + detail::fmt(worst));
    });

    const auto selected_sample = [&](PolicyKind kind, double alpha, int m, double p,
                                     std::uint64_t salt) {
        std::vector<UserSpec> users = {
            {0, alpha, ChannelModel::nakagami(m, 1.0), shannon},
            {1, 1.0 - alpha, ChannelModel::rayleigh(1.0), shannon},
        };
        SimConfig cfg;
        cfg.users = users;
        cfg.policy.kind = kind;
        cfg.policy.nfb_probability = p;
        cfg.num_replicas = 4;
        cfg.num_slots =
            static_cast<std::uint64_t>(slots(1e5) / alpha / cfg.num_replicas) + 1;
        cfg.threads = threads;
        cfg.master_seed = stream_seed(seed, salt);
        cfg.reservoir_capacity = static_cast<std::size_t>(slots(1e5));
        return run(cfg).users[0].selected_snr_sample;
    };

    rec.run(4, "CS selected-SNR law F^{1/alpha} (KS 1%) + negative control", [&] {
        bool ok = true;
        std::ostringstream detail;
        std::uint64_t salt = 0x400;
        for (const double alpha : {0.1, 0.25, 0.5})
            for (const int m : {1, 4}) {
                const auto sample = selected_sample(PolicyKind::CS, alpha, m, 0.0, salt++);
                const ChannelModel ch = ChannelModel::nakagami(m, 1.0);
                const double d = ks_distance(
                    sample, [&](double g) { return std::pow(ch.cdf(g), 1.0 / alpha); });
                const double crit = ks_critical_1pct(sample.size());
                ok = ok && d < crit;
                detail << "a=" << alpha << ",m=" << m << ":" << detail::fmt(d) << "<"
                       << detail::fmt(crit) << " ";
            }
        {
            const auto sample = selected_sample(PolicyKind::CS, 0.25, 1, 0.0, 0x40f);
            const ChannelModel ch = ChannelModel::rayleigh(1.0);
            const double d = ks_distance(sample, [&](double g) { return ch.cdf(g); });
            const bool control_fails = d > ks_critical_1pct(sample.size());
            ok = ok && control_fails;
            detail << "negative-control=" << (control_fails ? "rejected" : "NOT-rejected");
        }
        return std::make_pair(ok, detail.str());
    });

    rec.run(5, "CS-FR selected-SNR law (piecewise form, KS 1%, both branches)", [&] {
        bool ok = true;
        std::ostringstream detail;
        std::uint64_t salt = 0x500;
        for (const double alpha : {0.25, 0.5})
            for (const double p : {0.05, 0.2}) {
                const auto sample = selected_sample(PolicyKind::CSFR, alpha, 1, p, salt++);
                const ChannelModel ch = ChannelModel::rayleigh(1.0);
                const double d = ks_distance(
                    sample, [&](double g) { return csfr_selected_cdf(ch, alpha, p, g); });
                const double crit = ks_critical_1pct(sample.size());
                const double boundary = ch.inverse_cdf(std::pow(p, alpha));
                std::size_t below = 0;
                for (const double g : sample) below += g < boundary;
                const bool both_branches = below > 0 && below < sample.size();
                ok = ok && d < crit && both_branches;
                detail << "a=" << alpha << ",p=" << p << ":" << detail::fmt(d) << "<"
                       << detail::fmt(crit) << (both_branches ? "" : " one-branch!") << " ";
            }
        return std::make_pair(ok, detail.str());
    });

    rec.run(6, "CAR satisfaction within 0.005 (CS, CS-FR, RRS, Liu, DF)", [&] {
        bool ok = true;
        std::ostringstream detail;
        const double tol = options.quick ? 0.016 : 0.005;
        std::uint64_t salt = 0x600;
        ExperimentOptions eo;
        eo.seed = seed;
        eo.slots = slots(1e6);
        eo.replicas = 4;
        eo.threads = threads;
        CalibrationOptions cal;
        cal.tolerance = options.quick ? 0.008 : 0.002;
        if (options.quick) {
            cal.block_slots = 200'000;
            cal.validation_slots = 200'000;
            cal.max_slots = 4'000'000;
        }
        for (const double target1 : {0.7, 0.5}) {
            const auto users = two_user_scenario(target1);
            const std::vector<double> targets = {target1, 1.0 - target1};
            for (const PolicyKind kind : {PolicyKind::CS, PolicyKind::CSFR, PolicyKind::RRS,
                                          PolicyKind::Liu, PolicyKind::DF}) {
                const PolicyRun pr =
                    run_policy(users, kind, eo, salt++, kind == PolicyKind::CSFR ? 0.1 : 0.0,
                               targets, cal);
                double worst = 0.0;
                for (std::size_t i = 0; i < targets.size(); ++i)
                    worst = std::max(worst, std::fabs(pr.report.users[i].car - targets[i]));
                ok = ok && worst < tol;
                detail << policy_name(kind) << "@" << target1 << ":" << detail::fmt(worst)
                       << " ";
            }
        }
        return std::make_pair(ok, detail.str());
    });

    rec.run(7, "S_CS/S_UB floors (0.88/0.93 at 0 dB, 0.91/0.95 at 10 dB)", [&] {
        bool ok = true;
        std::ostringstream detail;
        for (const double snr_db : {0.0, 10.0})
            for (const int m : {1, 4}) {
                const double floor = snr_db == 0.0 ? (m == 1 ? 0.88 : 0.93)
                                                   : (m == 1 ? 0.91 : 0.95);
                const ChannelModel ch = ChannelModel::nakagami_db(m, snr_db);
                double worst = 1.0;
                for (int i = 1; i <= 20; ++i) {
                    const double alpha = i / 20.0;
                    worst = std::min(worst, s_cs(ch, shannon, alpha) / s_ub(ch, shannon, alpha));
                }
                ok = ok && worst >= floor - 1e-9;
                detail << "m=" << m << "@" << snr_db << "dB:min=" << detail::fmt(worst)
                       << ">=" << floor << " ";
            }
        return std::make_pair(ok, detail.str());
    });

    rec.run(8, "CS-FR/CS sandwich 1-p <= 1-p+ap^{2-a} <= ratio <= 1", [&] {
        bool ok = true;
        double worst_margin = 1.0;
        for (const double alpha : {0.1, 0.5, 0.9})
            for (const double p : {0.01, 0.1, 0.5})
                for (const int m : {1, 4}) {
                    const ChannelModel ch = ChannelModel::nakagami_db(m, 0.0);
                    const double cs_value = s_cs(ch, shannon, alpha, 1e-10);
                    const double csfr_value = s_csfr(ch, shannon, alpha, p, 1e-10);
                    const CsfrBoundsVerdict v =
                        csfr_bounds(alpha, p, cs_value, csfr_value, 1e-9);
                    ok = ok && v.holds;
                    worst_margin = std::min({worst_margin, v.ratio - v.lower_tight,
                                             1.0 - v.ratio, v.lower_tight - v.lower_loose});
                }
        return std::make_pair(ok, "worst margin " + detail::fmt(worst_margin));
    });

    rec.run(9, "fairness: CS I_D law, QFI floor, CS vs Liu/DF, RRS D=1/2", [&] {
        bool ok = true;
        std::ostringstream detail;
        ExperimentOptions eo;
        eo.seed = seed;
        eo.slots = slots(1e6);
        eo.replicas = 4;
        eo.threads = threads;
        CalibrationOptions cal;
        cal.tolerance = options.quick ? 0.008 : 0.002;
        if (options.quick) {
            cal.block_slots = 200'000;
            cal.validation_slots = 200'000;
            cal.max_slots = 4'000'000;
        }
        std::uint64_t salt = 0x900;

        // CS empirical I_D across the alpha grid (both users per run).
        double worst_sigma = 0.0;
        for (const double a1 : {0.1, 0.2, 0.3, 0.4, 0.5}) {
            const PolicyRun pr = run_policy(two_user_scenario(a1), PolicyKind::CS, eo, salt++);
            const FairnessReport fr = fairness_from_report(pr.report);
            for (std::size_t i = 0; i < 2; ++i) {
                const double alpha = pr.report.alphas[i];
                const double se = fr.estimator_stderr[i] / fr.d_ub[i];
                const double gap = std::fabs(fr.i_d[i] - i_d_cs(alpha));
                worst_sigma = std::max(worst_sigma, gap / se);
                ok = ok && gap <= 3.0 * se;
                ok = ok && fr.qfi >= 8.0 / 9.0 - 3.0 * se;
            }
        }
        detail << "I_D worst z=" << detail::fmt(worst_sigma) << " ";

        // Asymmetric (0.7, 0.3) comparison with non-overlapping 3 s.e. bands.
        const auto users = two_user_scenario(0.7);
        const auto qfi_band = [&](PolicyKind kind, std::uint64_t s) {
            const PolicyRun pr = run_policy(users, kind, eo, s, 0.0, {0.7, 0.3}, cal);
            const FairnessReport fr = fairness_from_report(pr.report);
            std::size_t arg = 0;
            for (std::size_t i = 1; i < fr.i_d.size(); ++i)
                if (fr.i_d[i] < fr.i_d[arg]) arg = i;
            const double se = fr.estimator_stderr[arg] / fr.d_ub[arg];
            return std::make_pair(fr.qfi, se);
        };
        const auto [qfi_cs, se_cs] = qfi_band(PolicyKind::CS, 0x910);
        const auto [qfi_liu, se_liu] = qfi_band(PolicyKind::Liu, 0x911);
        const auto [qfi_df, se_df] = qfi_band(PolicyKind::DF, 0x912);
        const bool beats_liu = qfi_cs - 3.0 * se_cs > qfi_liu + 3.0 * se_liu;
        const bool beats_df = qfi_cs - 3.0 * se_cs > qfi_df + 3.0 * se_df;
        ok = ok && beats_liu && beats_df;
        detail << "QFI cs=" << detail::fmt(qfi_cs) << " liu=" << detail::fmt(qfi_liu)
               << " df=" << detail::fmt(qfi_df) << " ";

        // RRS: D pinned at 1/2 for both users.
        const PolicyRun rrs = run_policy(users, PolicyKind::RRS, eo, 0x920);
        for (const auto& um : rrs.report.users) {
            ok = ok &&
                 std::fabs(um.mean_selected_cdf - 0.5) <= 3.0 * um.mean_selected_cdf_stderr;
        }
        detail << "RRS D=" << detail::fmt(rrs.report.users[0].mean_selected_cdf) << ","
               << detail::fmt(rrs.report.users[1].mean_selected_cdf);
        return std::make_pair(ok, detail.str());
    });

    rec.run(10, "property suite (monotonicity laws, gain trends, closed lower bound)", [&] {
        bool ok = true;
        std::ostringstream detail;
        RngStream rng(stream_seed(seed, 0xa00));
        const auto slack = [](double a, double b) {
            return 1e-8 * std::max({1.0, std::fabs(a), std::fabs(b)});
        };
        const int instances = options.quick ? 40 : 200;
        int violations = 0;
        for (int i = 0; i < instances; ++i) {
            const int m = 1 + static_cast<int>(rng.uniform_index(6));
            const double mean = std::exp(std::log(0.5) +
                                         rng.uniform01() * std::log(20.0 / 0.5));
            const ChannelModel ch = ChannelModel::nakagami(m, mean);
            RateFunction rate = shannon;
            if (i % 3 == 1) rate = RateFunction::capped_shannon(1.0 + 3.0 * rng.uniform01());
            if (i % 3 == 2)
                rate = RateFunction::table_mcs(
                    {{0.3, 0.5}, {1.0, 1.2}, {3.0, 2.1}, {8.0, 3.0}});
            const double a_hi = 0.05 + 0.95 * rng.uniform01();
            const double a_lo = a_hi * (0.1 + 0.85 * rng.uniform01());
            const double x_hi = 0.9 * rng.uniform01();
            const double x_lo = x_hi * rng.uniform01();

            const auto S = [&](double x, double a) { return s_universal(ch, rate, x, a); };
            const auto SL = [&](double x, double a) { return s_lower_part(ch, rate, x, a); };

            // P1: alpha S(x, alpha) nondecreasing in alpha.
            const double p1a = a_lo * S(x_lo, a_lo), p1b = a_hi * S(x_lo, a_hi);
            if (p1a > p1b + slack(p1a, p1b)) ++violations;
            // P2: S(x^alpha, alpha) nonincreasing in alpha.
            const double p2a = S(std::pow(x_hi, a_lo), a_lo);
            const double p2b = S(std::pow(x_hi, a_hi), a_hi);
            if (p2a < p2b - slack(p2a, p2b)) ++violations;
            // P3: S(x, alpha) nonincreasing in x.
            const double p3a = S(x_lo, a_hi), p3b = S(x_hi, a_hi);
            if (p3a < p3b - slack(p3a, p3b)) ++violations;
            // P4: S(x, alpha) / (1 - x^{1/alpha}) nondecreasing in x.
            const double den_lo = 1.0 - std::pow(x_lo, 1.0 / a_hi);
            const double den_hi = 1.0 - std::pow(x_hi, 1.0 / a_hi);
            if (den_hi > 1e-9) {
                const double p4a = p3a / den_lo, p4b = p3b / den_hi;
                if (p4a > p4b + slack(p4a, p4b)) ++violations;
            }
            // P5: alpha S_L(x, alpha) nondecreasing in alpha.
            const double p5a = a_lo * SL(x_hi, a_lo), p5b = a_hi * SL(x_hi, a_hi);
            if (p5a > p5b + slack(p5a, p5b)) ++violations;
            // P6: S(x^a, a) + x^{1-a} S_L(x^a, 1) nonincreasing in x.
            const auto p6 = [&](double x) {
                return S(std::pow(x, a_lo), a_lo) +
                       std::pow(x, 1.0 - a_lo) * SL(std::pow(x, a_lo), 1.0);
            };
            if (x_lo > 0.0) {
                const double p6a = p6(x_lo), p6b = p6(x_hi);
                if (p6a < p6b - slack(p6a, p6b)) ++violations;
            }
        }
        ok = ok && violations == 0;
        detail << "instances=" << instances << " violations=" << violations << " ";

        // CS throughput rises with the CAR while its gain falls, never below 1.
        for (const int m : {1, 4}) {
            const ChannelModel ch = ChannelModel::nakagami_db(m, 0.0);
            double prev_scs = 0.0, prev_gain = std::numeric_limits<double>::infinity();
            for (int i = 1; i <= 10; ++i) {
                const double alpha = i / 10.0;
                const double scs = s_cs(ch, shannon, alpha);
                const double gain = scs / s_rrs(ch, shannon, alpha);
                ok = ok && scs >= prev_scs - 1e-10 && gain <= prev_gain + 1e-10 &&
                     gain >= 1.0 - 1e-9;
                prev_scs = scs;
                prev_gain = gain;
            }
        }

        // Capped rates drive the CS/upper-bound ratio to 1 as the CAR shrinks.
        {
            const ChannelModel ch = ChannelModel::rayleigh(1.0);
            const RateFunction capped = RateFunction::capped_shannon(2.0);
            double prev = 0.0;
            bool trend = true;
            for (const double alpha : {0.1, 0.01, 0.001}) {
                const double ratio = s_cs(ch, capped, alpha) / s_ub(ch, capped, alpha);
                trend = trend && ratio > prev;
                prev = ratio;
            }
            ok = ok && trend && prev > 0.99;
            detail << "capped ratio@0.001=" << detail::fmt(prev) << " ";
        }

        // The closed-form lower bound never exceeds S_CS.
        for (const int m : {1, 4})
            for (int i = 1; i <= 10; ++i) {
                const double alpha = i / 10.0;
                const ChannelModel ch = ChannelModel::nakagami_db(m, 0.0);
                ok = ok && s_lb(ch, shannon, alpha) <= s_cs(ch, shannon, alpha) + 1e-8;
            }
        return std::make_pair(ok, detail.str());
    });

    rec.run(11, "reproducibility: identical CSV for 1-thread and 8-thread runs", [&] {
        const std::filesystem::path dir = options.work_dir;
        std::filesystem::create_directories(dir);
        const auto config_path = dir / "repro_config.json";
        {
            nlohmann::json doc;
            doc["name"] = "repro_check";
            doc["users"] = {{{"weight", 0.6},
                             {"channel", {{"type", "nakagami"}, {"m", 1}, {"mean_snr_db", 0.0}}}},
                            {{"weight", 0.4},
                             {"channel", {{"type", "nakagami"}, {"m", 4}, {"mean_snr_db", 0.0}}}}};
            doc["policies"] = {"cs", std::string("rrs"),
                               nlohmann::json{{"policy", "csfr"}, {"p", 0.1}}};
            doc["slots"] = slots(2e5);
            doc["replicas"] = 8;
            doc["seed"] = stream_seed(seed, 0xb00);
            std::ofstream(config_path) << doc.dump(2);
        }
        const auto run_with = [&](int threads_used, const std::string& sub) {
            ExperimentOptions eo;
            eo.out_dir = (dir / sub).string();
            eo.threads = threads_used;
            const ExperimentArtifacts art = run_experiment(config_path.string(), eo);
            std::ifstream in(art.csv_path, std::ios::binary);
            std::ostringstream text;
            text << in.rdbuf();
            return text.str();
        };
        const std::string csv1 = run_with(1, "t1");
        const std::string csv8 = run_with(8, "t8");
        const bool ok = !csv1.empty() && csv1 == csv8;
        return std::make_pair(ok, ok ? "byte-identical (" + std::to_string(csv1.size()) + " bytes)"
                                     : "outputs differ");
    });

    return results;
}

// Prints one line per criterion; returns a process exit code.
inline int print_validation(const std::vector<CheckResult>& results) {
    bool all = true;
    for (const auto& r : results) {
        all = all && r.passed;
        std::printf("[%s] criterion %2d: %s (%.0f ms)\n    %s\n",
                    r.passed ? "PASS" : "FAIL", r.criterion, r.name.c_str(), r.elapsed_ms,
                    r.detail.c_str());
    }
    std::printf("%s: %zu/%zu criteria passed\n", all ? "OK" : "FAILURES",
                static_cast<std::size_t>(std::count_if(results.begin(), results.end(),
                                                       [](const CheckResult& r) { return r.passed; })),
                results.size());
    return all ? 0 : 1;
}

}  // namespace csched
