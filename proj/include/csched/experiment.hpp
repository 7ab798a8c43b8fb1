#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "csched/analysis.hpp"
#include "csched/fairness.hpp"
#include "csched/montecarlo.hpp"
#include "csched/sched_core.hpp"

namespace csched {

inline constexpr const char* version_string = "1.0.0";

struct ExperimentOptions {
    std::string out_dir = "out";
    std::uint64_t seed = 20260808;
    std::uint64_t slots = 1'000'000;
    int replicas = 8;
    int threads = 0;  // 0 -> hardware concurrency
    bool quick = false;

    std::uint64_t effective_slots() const { return quick ? slots / 10 : slots; }
    int effective_threads() const {
        if (threads > 0) return threads;
        const unsigned hw = std::thread::hardware_concurrency();
        return hw == 0 ? 1 : static_cast<int>(hw);
    }
};

// ---------------------------------------------------------------------------
// Config parsing

inline ChannelModel channel_from_json(const nlohmann::json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "nakagami") {
        const int m = j.at("m").get<int>();
        if (j.contains("mean_snr_db")) return ChannelModel::nakagami_db(m, j.at("mean_snr_db").get<double>());
        return ChannelModel::nakagami(m, j.at("mean_snr").get<double>());
    }
    if (type == "rayleigh") {
        if (j.contains("mean_snr_db")) return ChannelModel::nakagami_db(1, j.at("mean_snr_db").get<double>());
        return ChannelModel::rayleigh(j.at("mean_snr").get<double>());
    }
    if (type == "constant") {
        if (j.contains("snr_db")) return ChannelModel::constant(db_to_linear(j.at("snr_db").get<double>()));
        return ChannelModel::constant(j.at("snr").get<double>());
    }
    if (type == "empirical") {
        std::vector<std::pair<double, double>> table;
        for (const auto& knot : j.at("table"))
            table.emplace_back(knot.at(0).get<double>(), knot.at(1).get<double>());
        return ChannelModel::empirical(std::move(table));
    }
    throw std::invalid_argument("unknown channel type: " + type);
}

inline RateFunction rate_from_json(const nlohmann::json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "shannon") return RateFunction::shannon();
    if (type == "capped_shannon") return RateFunction::capped_shannon(j.at("cap_rate").get<double>());
    if (type == "table_mcs") {
        std::vector<std::pair<double, double>> steps;
        for (const auto& s : j.at("steps"))
            steps.emplace_back(s.at(0).get<double>(), s.at(1).get<double>());
        return RateFunction::table_mcs(std::move(steps));
    }
    throw std::invalid_argument("unknown rate type: " + type);
}

inline UserSpec user_from_json(const nlohmann::json& j, int id) {
    UserSpec u;
    u.user_id = id;
    u.weight = j.at("weight").get<double>();
    u.channel = channel_from_json(j.at("channel"));
    u.rate_fn = j.contains("rate") ? rate_from_json(j.at("rate")) : RateFunction::shannon();
    return u;
}

inline PolicyKind policy_kind_from_string(const std::string& s) {
    if (s == "cs") return PolicyKind::CS;
    if (s == "csfr") return PolicyKind::CSFR;
    if (s == "rrs") return PolicyKind::RRS;
    if (s == "liu") return PolicyKind::Liu;
    if (s == "df") return PolicyKind::DF;
    if (s == "optimal_threshold") return PolicyKind::OptimalThreshold;
    throw std::invalid_argument("unknown policy: " + s);
}

inline std::string policy_name(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::CS: return "cs";
        case PolicyKind::CSFR: return "csfr";
        case PolicyKind::RRS: return "rrs";
        case PolicyKind::Liu: return "liu";
        case PolicyKind::DF: return "df";
        case PolicyKind::OptimalThreshold: return "optimal_threshold";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// CSV + manifest plumbing

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> cells) {
        if (cells.size() != columns.size())
            throw std::logic_error("CsvTable: row width mismatch");
        rows.push_back(std::move(cells));
    }
};

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

struct ExperimentArtifacts {
    std::string name;
    std::filesystem::path csv_path;
    std::filesystem::path manifest_path;
    std::string config_hash;
    std::string csv_hash;
    bool complete = true;
};

// Renders the table with a `#` comment header carrying the manifest hash,
// writes the CSV and a JSON manifest that can be re-run verbatim.
inline ExperimentArtifacts write_experiment(const std::string& name, const CsvTable& table,
                                            const nlohmann::json& config,
                                            const ExperimentOptions& options,
                                            double elapsed_ms, bool complete = true) {
    const std::string config_dump = config.dump();
    const std::string config_hash = hex64(fnv1a64(config_dump));

    std::ostringstream csv;
    csv << "# csched experiment: " << name << "\n";
    csv << "# config_hash: " << config_hash << "\n";
    csv << "# seed: " << options.seed << " slots: " << options.effective_slots()
        << " replicas: " << options.replicas << "\n";
    csv << "# version: " << version_string << "\n";
    for (std::size_t i = 0; i < table.columns.size(); ++i)
        csv << (i ? "," : "") << table.columns[i];
    csv << "\n";
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) csv << (i ? "," : "") << row[i];
        csv << "\n";
    }
    const std::string csv_text = csv.str();

    std::filesystem::create_directories(options.out_dir);
    ExperimentArtifacts artifacts;
    artifacts.name = name;
    artifacts.config_hash = config_hash;
    artifacts.csv_hash = hex64(fnv1a64(csv_text));
    artifacts.complete = complete;
    artifacts.csv_path = std::filesystem::path(options.out_dir) / (name + ".csv");
    artifacts.manifest_path = std::filesystem::path(options.out_dir) / (name + ".manifest.json");

    std::ofstream(artifacts.csv_path, std::ios::binary) << csv_text;

    nlohmann::json manifest;
    manifest["experiment"] = name;
    manifest["version"] = version_string;
    manifest["config"] = config;
    manifest["config_hash"] = config_hash;
    manifest["csv_file"] = artifacts.csv_path.filename().string();
    manifest["csv_hash"] = artifacts.csv_hash;
    manifest["columns"] = table.columns;
    manifest["rows"] = table.rows.size();
    manifest["status"] = complete ? "complete" : "incomplete";
    manifest["elapsed_ms"] = elapsed_ms;
    std::ofstream(artifacts.manifest_path, std::ios::binary) << manifest.dump(2) << "\n";
    return artifacts;
}

// ---------------------------------------------------------------------------
// Scenario helpers

// The two-user asymmetric study scenario: one Rayleigh user and one
// Nakagami-4 user, both at the given average SNR, weights (a, 1-a).
inline std::vector<UserSpec> two_user_scenario(double alpha1, double snr_db = 0.0) {
    if (!(alpha1 > 0.0) || !(alpha1 < 1.0))
        throw std::invalid_argument("two_user_scenario: alpha1 must lie in (0, 1)");
    return {
        {0, alpha1, ChannelModel::nakagami_db(1, snr_db), RateFunction::shannon()},
        {1, 1.0 - alpha1, ChannelModel::nakagami_db(4, snr_db), RateFunction::shannon()},
    };
}

struct PolicyRun {
    MetricsReport report;
    OffsetVector offsets;  // Liu/DF only
};

// Runs one policy over a fixed user set, calibrating Liu/DF offsets first.
inline PolicyRun run_policy(const std::vector<UserSpec>& users, PolicyKind kind,
                            const ExperimentOptions& options, std::uint64_t seed_salt,
                            double p = 0.0, const std::vector<double>& targets = {},
                            CalibrationOptions calibration = {}, const TraceSink& sink = {},
                            NfbSelection nfb_selection = NfbSelection::WeightedRandom) {
    PolicyRun out;
    SimConfig cfg;
    cfg.users = users;
    cfg.policy.kind = kind;
    cfg.policy.nfb_probability = p;
    cfg.policy.nfb_selection = nfb_selection;
    cfg.num_slots = options.effective_slots();
    cfg.num_replicas = options.replicas;
    cfg.threads = options.effective_threads();
    cfg.master_seed = stream_seed(options.seed, seed_salt);

    if (kind == PolicyKind::Liu || kind == PolicyKind::DF) {
        const std::vector<double> goal = targets.empty() ? cars(users) : targets;
        calibration.seed = stream_seed(cfg.master_seed, 0xca1u);
        if (options.quick) {
            calibration.tolerance = std::max(calibration.tolerance, 0.01);
            calibration.max_slots = std::min<std::uint64_t>(calibration.max_slots, 4'000'000);
            calibration.block_slots = 200'000;
            calibration.validation_slots = 200'000;
        }
        out.offsets = calibrate_offsets(
            users, goal, kind == PolicyKind::Liu ? OffsetPolicy::Liu : OffsetPolicy::DF,
            calibration);
        cfg.policy.offsets = out.offsets.offsets;
        cfg.policy.offsets_provided = true;
    }
    out.report = run(cfg, sink);
    return out;
}

// ---------------------------------------------------------------------------
// Built-in experiments (the standard figure set at desk scale)

namespace experiments {

inline std::vector<double> alpha_grid_default(bool quick) {
    std::vector<double> grid;
    const int points = quick ? 5 : 9;
    for (int i = 1; i <= points; ++i) grid.push_back(static_cast<double>(i) / (points + 1));
    return grid;
}

// CDF curves of Nakagami-m SNR at 0 dB (the outage-tradeoff picture).
inline CsvTable cdf_curves(const ExperimentOptions&) {
    CsvTable t;
    t.columns = {"m", "mean_snr_db", "snr", "cdf"};
    for (const int m : {1, 2, 4, 10}) {
        const ChannelModel ch = ChannelModel::nakagami_db(m, 0.0);
        for (int i = 0; i <= 100; ++i) {
            const double snr = 0.05 * i;
            t.add_row({format_number(m), format_number(0.0), format_number(snr),
                       format_number(ch.cdf(snr))});
        }
    }
    return t;
}

// Sum throughput of the two-user scenario vs the first user's CAR.
inline CsvTable fig2_sum_throughput(const ExperimentOptions& options) {
    CsvTable t;
    t.columns = {"alpha1",      "policy", "sum_throughput_mc", "sum_throughput_stderr",
                 "sum_throughput_analytic"};
    const auto grid = alpha_grid_default(options.quick);
    std::uint64_t salt = 0x2000;
    for (const double a1 : grid) {
        const auto users = two_user_scenario(a1);
        for (const PolicyKind kind :
             {PolicyKind::CS, PolicyKind::Liu, PolicyKind::DF, PolicyKind::RRS}) {
            const PolicyRun pr = run_policy(users, kind, options, salt++);
            double mc = 0.0, var = 0.0;
            for (const auto& u : pr.report.users) {
                mc += u.throughput;
                var += u.throughput_stderr * u.throughput_stderr;
            }
            std::string analytic = "";
            if (kind == PolicyKind::CS)
                analytic = format_number(
                    s_cs(users[0].channel, users[0].rate_fn, a1) +
                    s_cs(users[1].channel, users[1].rate_fn, 1.0 - a1));
            else if (kind == PolicyKind::RRS)
                analytic = format_number(
                    s_rrs(users[0].channel, users[0].rate_fn, a1) +
                    s_rrs(users[1].channel, users[1].rate_fn, 1.0 - a1));
            t.add_row({format_number(a1), policy_name(kind), format_number(mc),
                       format_number(std::sqrt(var)), analytic});
        }
    }
    return t;
}

// Per-user throughput gain vs the user's own CAR, both fading shapes.
inline CsvTable fig3_gain_vs_car(const ExperimentOptions& options) {
    CsvTable t;
    t.columns = {"alpha", "m_observed", "policy", "gain_mc", "gain_stderr", "gain_analytic"};
    const auto grid = alpha_grid_default(options.quick);
    std::uint64_t salt = 0x3000;
    for (int observed = 0; observed < 2; ++observed) {
        for (const double alpha : grid) {
            const double a1 = observed == 0 ? alpha : 1.0 - alpha;
            const auto users = two_user_scenario(a1);
            const auto& user = users[static_cast<std::size_t>(observed)];
            const int m = user.channel.shape_m();
            const double rr = s_rrs(user.channel, user.rate_fn, alpha);
            t.add_row({format_number(alpha), format_number(m), "ub", "", "",
                       format_number(s_ub(user.channel, user.rate_fn, alpha) / rr)});
            for (const PolicyKind kind : {PolicyKind::CS, PolicyKind::Liu, PolicyKind::DF}) {
                const PolicyRun pr = run_policy(users, kind, options, salt++);
                const auto& um = pr.report.users[static_cast<std::size_t>(observed)];
                std::string analytic = "";
                if (kind == PolicyKind::CS)
                    analytic = format_number(s_cs(user.channel, user.rate_fn, alpha) / rr);
                t.add_row({format_number(alpha), format_number(m), policy_name(kind),
                           format_number(um.throughput / rr),
                           format_number(um.throughput_stderr / rr), analytic});
            }
        }
    }
    return t;
}

// Per-user achieved multi-user diversity in the (0.7, 0.3) scenario.
inline CsvTable fig4_id_per_user(const ExperimentOptions& options) {
    CsvTable t;
    t.columns = {"policy", "user", "alpha", "i_d_mc", "i_d_stderr", "i_d_analytic"};
    const auto users = two_user_scenario(0.7);
    std::uint64_t salt = 0x4000;
    for (const PolicyKind kind :
         {PolicyKind::RRS, PolicyKind::CS, PolicyKind::Liu, PolicyKind::DF}) {
        const PolicyRun pr = run_policy(users, kind, options, salt++);
        const FairnessReport fr = fairness_from_report(pr.report);
        for (std::size_t i = 0; i < users.size(); ++i) {
            const double alpha = pr.report.alphas[i];
            std::string analytic = "";
            if (kind == PolicyKind::CS) analytic = format_number(i_d_cs(alpha));
            if (kind == PolicyKind::RRS) analytic = format_number(0.5 / d_ub(alpha));
            t.add_row({policy_name(kind), format_number(static_cast<double>(i)),
                       format_number(alpha), format_number(fr.i_d[i]),
                       format_number(fr.estimator_stderr[i] / fr.d_ub[i]), analytic});
        }
    }
    return t;
}

// Scheduler QFI (min-user I_D) vs the first user's CAR.
inline CsvTable fig5_qfi_vs_car(const ExperimentOptions& options) {
    CsvTable t;
    t.columns = {"alpha1", "policy", "qfi_mc", "qfi_analytic"};
    const auto grid = alpha_grid_default(options.quick);
    std::uint64_t salt = 0x5000;
    for (const double a1 : grid) {
        const auto users = two_user_scenario(a1);
        for (const PolicyKind kind :
             {PolicyKind::RRS, PolicyKind::CS, PolicyKind::Liu, PolicyKind::DF}) {
            const PolicyRun pr = run_policy(users, kind, options, salt++);
            const FairnessReport fr = fairness_from_report(pr.report);
            std::string analytic = "";
            if (kind == PolicyKind::CS)
                analytic = format_number(std::min(i_d_cs(a1), i_d_cs(1.0 - a1)));
            if (kind == PolicyKind::RRS)
                analytic = format_number(
                    std::min(0.5 / d_ub(a1), 0.5 / d_ub(1.0 - a1)));
            t.add_row({format_number(a1), policy_name(kind), format_number(fr.qfi), analytic});
        }
    }
    return t;
}

// Throughput gain vs average SNR at CAR 0.1 for the observed user.
inline CsvTable fig6_gain_vs_snr(const ExperimentOptions& options) {
    CsvTable t;
    t.columns = {"mean_snr_db", "m_observed", "policy", "gain_mc", "gain_stderr",
                 "gain_analytic"};
    const double alpha = 0.1;
    std::uint64_t salt = 0x6000;
    for (double snr_db = 0.0; snr_db <= 20.0 + 1e-9; snr_db += options.quick ? 10.0 : 4.0) {
        for (int observed = 0; observed < 2; ++observed) {
            const double a1 = observed == 0 ? alpha : 1.0 - alpha;
            const auto users = two_user_scenario(a1, snr_db);
            const auto& user = users[static_cast<std::size_t>(observed)];
            const double rr = s_rrs(user.channel, user.rate_fn, alpha);
            t.add_row({format_number(snr_db), format_number(user.channel.shape_m()), "cs", "",
                       "", format_number(s_cs(user.channel, user.rate_fn, alpha) / rr)});
            for (const PolicyKind kind : {PolicyKind::Liu, PolicyKind::DF}) {
                const PolicyRun pr = run_policy(users, kind, options, salt++);
                const auto& um = pr.report.users[static_cast<std::size_t>(observed)];
                t.add_row({format_number(snr_db), format_number(user.channel.shape_m()),
                           policy_name(kind), format_number(um.throughput / rr),
                           format_number(um.throughput_stderr / rr), ""});
            }
        }
    }
    return t;
}

// Average feedback overhead vs NFB probability, equal weights.
inline CsvTable fig7_feedback_overhead(const ExperimentOptions& options,
                                       bool as_ratio = false) {
    CsvTable t;
    t.columns = {"p",  "n",  as_ratio ? "ratio_analytic" : "mu_analytic", "minus_ln_p",
                 as_ratio ? "ratio_mc" : "mu_mc", "mc_stderr"};
    const std::vector<double> mc_points = {0.02, 0.1, 0.3};
    std::uint64_t salt = as_ratio ? 0x8000 : 0x7000;
    for (const int n : {5, 10, 100}) {
        for (int i = 1; i <= (options.quick ? 9 : 45); ++i) {
            const double p = options.quick ? i * 0.1 : i * 0.02;
            if (p >= 1.0) break;
            const double denom = as_ratio ? n : 1.0;
            const double mu = n * (1.0 - std::pow(p, 1.0 / n));
            std::string mc = "", mc_se = "";
            const bool want_mc =
                std::find_if(mc_points.begin(), mc_points.end(), [&](double q) {
                    return std::fabs(q - p) < 1e-12;
                }) != mc_points.end();
            if (want_mc) {
                std::vector<UserSpec> users;
                for (int u = 0; u < n; ++u)
                    users.push_back({u, 1.0, ChannelModel::rayleigh(1.0), RateFunction::shannon()});
                ExperimentOptions small = options;
                small.slots = std::min<std::uint64_t>(options.slots, 200'000);
                const PolicyRun pr =
                    run_policy(users, PolicyKind::CSFR, small, salt++, p);
                mc = format_number(pr.report.mean_feedback_per_slot / denom);
                mc_se = format_number(pr.report.mean_feedback_stderr / denom);
            }
            t.add_row({format_number(p), format_number(n), format_number(mu / denom),
                       format_number(-std::log(p) / denom), mc, mc_se});
        }
    }
    return t;
}

// CS / CS-FR throughput gain vs 1/alpha (the contender-count axis).
inline CsvTable fig9_gain_vs_inv_alpha(const ExperimentOptions& options) {
    CsvTable t;
    t.columns = {"inv_alpha", "m", "policy", "p", "gain_analytic", "gain_closed_form"};
    const int top = options.quick ? 10 : 20;
    for (const int m : {1, 4}) {
        const ChannelModel ch = ChannelModel::nakagami_db(m, 0.0);
        const RateFunction rate = RateFunction::shannon();
        const double e_r = mean_rate(ch, rate);
        for (int k = 1; k <= top; ++k) {
            const double alpha = 1.0 / k;
            const double rr = alpha * e_r;
            t.add_row({format_number(k), format_number(m), "cs", "",
                       format_number(s_cs(ch, rate, alpha) / rr),
                       format_number(alpha * s_nakagami_closed(ch, 0.0, k) / rr)});
            for (const double p : {0.02, 0.1, 0.3})
                t.add_row({format_number(k), format_number(m), "csfr", format_number(p),
                           format_number(s_csfr(ch, rate, alpha, p) / rr), ""});
        }
    }
    return t;
}

// CS-FR throughput gain vs NFB probability over a Rayleigh channel.
inline CsvTable fig10_gain_vs_nfb(const ExperimentOptions& options) {
    CsvTable t;
    t.columns = {"p", "alpha", "gain_analytic"};
    const ChannelModel ch = ChannelModel::nakagami_db(1, 0.0);
    const RateFunction rate = RateFunction::shannon();
    const double e_r = mean_rate(ch, rate);
    const double step = options.quick ? 0.1 : 0.05;
    for (const double alpha : {0.1, 0.25, 0.5}) {
        for (double p = 0.0; p <= 1.0 + 1e-9; p += step) {
            const double pc = std::min(p, 1.0);
            t.add_row({format_number(pc), format_number(alpha),
                       format_number(s_csfr(ch, rate, alpha, pc) / (alpha * e_r))});
        }
    }
    return t;
}

// Throughput ratio CS-FR / CS with its analytic envelope columns.
inline CsvTable fig11_csfr_cs_ratio(const ExperimentOptions& options) {
    CsvTable t;
    t.columns = {"p", "alpha", "ratio", "lower_tight", "lower_loose"};
    const ChannelModel ch = ChannelModel::nakagami_db(1, 0.0);
    const RateFunction rate = RateFunction::shannon();
    const double step = options.quick ? 0.1 : 0.05;
    for (const double alpha : {0.1, 0.25, 0.5}) {
        const double cs_value = s_cs(ch, rate, alpha);
        for (double p = 0.0; p <= 1.0 + 1e-9; p += step) {
            const double pc = std::min(p, 1.0);
            const double ratio = s_csfr(ch, rate, alpha, pc) / cs_value;
            t.add_row({format_number(pc), format_number(alpha), format_number(ratio),
                       format_number(1.0 - pc + alpha * std::pow(pc, 2.0 - alpha)),
                       format_number(1.0 - pc)});
        }
    }
    return t;
}

}  // namespace experiments

// ---------------------------------------------------------------------------
// Generic config-file experiments

struct ParsedPolicy {
    PolicyKind kind = PolicyKind::CS;
    double p = 0.0;
    NfbSelection nfb_selection = NfbSelection::WeightedRandom;
    std::vector<double> targets;
    CalibrationOptions calibration;
};

inline ParsedPolicy policy_from_json(const nlohmann::json& j) {
    ParsedPolicy pp;
    if (j.is_string()) {
        pp.kind = policy_kind_from_string(j.get<std::string>());
        return pp;
    }
    pp.kind = policy_kind_from_string(j.at("policy").get<std::string>());
    if (j.contains("p")) pp.p = j.at("p").get<double>();
    if (j.contains("nfb_selection")) {
        const std::string mode = j.at("nfb_selection").get<std::string>();
        if (mode == "weighted_random")
            pp.nfb_selection = NfbSelection::WeightedRandom;
        else if (mode == "round_robin")
            pp.nfb_selection = NfbSelection::DeterministicRR;
        else
            throw std::invalid_argument("unknown nfb_selection: " + mode);
    }
    if (j.contains("targets")) pp.targets = j.at("targets").get<std::vector<double>>();
    if (j.contains("calibration")) {
        const auto& c = j.at("calibration");
        if (c.contains("tolerance")) pp.calibration.tolerance = c.at("tolerance").get<double>();
        if (c.contains("max_slots")) pp.calibration.max_slots = c.at("max_slots").get<std::uint64_t>();
        if (c.contains("step_scale")) pp.calibration.step_scale = c.at("step_scale").get<double>();
    }
    return pp;
}

// One slot trace as a newline-delimited JSON record.
inline std::string trace_to_json_line(const SlotTrace& trace) {
    nlohmann::json j;
    j["slot"] = trace.slot_index;
    j["snr"] = trace.snr;
    j["cdf_value"] = trace.cdf_value;
    j["fed_back"] = trace.fed_back;
    j["selected_user"] = trace.selected_user;
    j["slot_kind"] = trace.slot_kind == SlotKind::NFB ? "nfb" : "fb";
    j["achieved_rate"] = trace.achieved_rate;
    return j.dump();
}

// Runs a declarative experiment document: a fixed user set, a policy list,
// and an optional sweep over alpha1 / p / mean_snr_db.
inline CsvTable run_config_experiment(const nlohmann::json& config,
                                      const ExperimentOptions& options) {
    CsvTable t;
    t.columns = {"sweep_axis", "sweep_value", "policy",     "user",
                 "alpha",      "car",         "car_stderr", "throughput",
                 "throughput_stderr", "mean_feedback",      "nfb_frequency",
                 "i_d",        "qfi"};

    std::string axis = "none";
    std::vector<double> sweep_values = {0.0};
    if (config.contains("sweep")) {
        axis = config.at("sweep").at("axis").get<std::string>();
        if (axis != "none") sweep_values = config.at("sweep").at("values").get<std::vector<double>>();
    }

    std::vector<nlohmann::json> policy_specs;
    if (config.contains("policies"))
        for (const auto& p : config.at("policies")) policy_specs.push_back(p);
    else
        policy_specs.push_back(config.at("policy"));

    std::ofstream trace_out;
    TraceSink sink;
    if (config.contains("trace_file")) {
        if (axis != "none" || policy_specs.size() != 1)
            throw std::invalid_argument("trace_file requires a single policy and no sweep");
        std::filesystem::create_directories(options.out_dir);
        trace_out.open(std::filesystem::path(options.out_dir) /
                           config.at("trace_file").get<std::string>(),
                       std::ios::binary);
        sink = [&trace_out](const SlotTrace& t) {
            trace_out << trace_to_json_line(t) << "\n";
        };
    }

    std::uint64_t salt = 0xc0f1;
    for (const double value : sweep_values) {
        std::vector<UserSpec> users;
        int id = 0;
        for (const auto& uj : config.at("users")) users.push_back(user_from_json(uj, id++));
        if (axis == "alpha1") {
            if (users.size() != 2)
                throw std::invalid_argument("alpha1 sweep requires exactly two users");
            users[0].weight = value;
            users[1].weight = 1.0 - value;
        } else if (axis == "mean_snr_db") {
            for (auto& u : users) {
                if (u.channel.kind() != ChannelKind::NakagamiM)
                    throw std::invalid_argument("mean_snr_db sweep requires Nakagami channels");
                u.channel = ChannelModel::nakagami_db(u.channel.shape_m(), value);
            }
        } else if (axis != "none" && axis != "p") {
            throw std::invalid_argument("unknown sweep axis: " + axis);
        }

        for (const auto& pj : policy_specs) {
            ParsedPolicy pp = policy_from_json(pj);
            if (axis == "p") pp.p = value;
            const PolicyRun pr = run_policy(users, pp.kind, options, salt++, pp.p, pp.targets,
                                            pp.calibration, sink, pp.nfb_selection);
            std::optional<FairnessReport> fr;
            if (pp.kind != PolicyKind::OptimalThreshold) {
                bool enough = true;
                for (const auto& u : pr.report.users)
                    enough = enough && u.selected_cdf_stats.count() >= 1000;
                if (enough) fr = fairness_from_report(pr.report);
            }
            for (std::size_t i = 0; i < users.size(); ++i) {
                const auto& um = pr.report.users[i];
                t.add_row({axis, format_number(value), policy_name(pp.kind),
                           format_number(static_cast<double>(i)),
                           format_number(pr.report.alphas[i]), format_number(um.car),
                           format_number(um.car_stderr), format_number(um.throughput),
                           format_number(um.throughput_stderr),
                           format_number(pr.report.mean_feedback_per_slot),
                           format_number(pr.report.nfb_frequency),
                           fr ? format_number(fr->i_d[i]) : "",
                           fr ? format_number(fr->qfi) : ""});
            }
        }
    }
    return t;
}

// ---------------------------------------------------------------------------
// Dispatch

inline const std::vector<std::string>& builtin_experiment_names() {
    static const std::vector<std::string> names = {
        "cdf_curves",
        "fig2_sum_throughput",
        "fig3_gain_vs_car",
        "fig4_id_per_user",
        "fig5_qfi_vs_car",
        "fig6_gain_vs_snr",
        "fig7_feedback_overhead",
        "fig8_feedback_ratio",
        "fig9_gain_vs_inv_alpha",
        "fig10_gain_vs_nfb",
        "fig11_csfr_cs_ratio",
    };
    return names;
}

inline bool is_builtin_experiment(const std::string& name) {
    const auto& names = builtin_experiment_names();
    return std::find(names.begin(), names.end(), name) != names.end();
}

// Runs a built-in experiment (by name) or a JSON config / manifest file
// (by path) and writes the CSV + manifest pair.
inline ExperimentArtifacts run_experiment(const std::string& spec,
                                          const ExperimentOptions& options) {
    const auto started = std::chrono::steady_clock::now();
    auto elapsed_ms = [&] {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                         started)
            .count();
    };

    nlohmann::json config;
    config["seed"] = options.seed;
    config["slots"] = options.slots;
    config["replicas"] = options.replicas;
    config["quick"] = options.quick;

    if (is_builtin_experiment(spec)) {
        config["experiment"] = spec;
        CsvTable table;
        using namespace experiments;
        if (spec == "cdf_curves") table = cdf_curves(options);
        else if (spec == "fig2_sum_throughput") table = fig2_sum_throughput(options);
        else if (spec == "fig3_gain_vs_car") table = fig3_gain_vs_car(options);
        else if (spec == "fig4_id_per_user") table = fig4_id_per_user(options);
        else if (spec == "fig5_qfi_vs_car") table = fig5_qfi_vs_car(options);
        else if (spec == "fig6_gain_vs_snr") table = fig6_gain_vs_snr(options);
        else if (spec == "fig7_feedback_overhead") table = fig7_feedback_overhead(options, false);
        else if (spec == "fig8_feedback_ratio") table = fig7_feedback_overhead(options, true);
        else if (spec == "fig9_gain_vs_inv_alpha") table = fig9_gain_vs_inv_alpha(options);
        else if (spec == "fig10_gain_vs_nfb") table = fig10_gain_vs_nfb(options);
        else if (spec == "fig11_csfr_cs_ratio") table = fig11_csfr_cs_ratio(options);
        return write_experiment(spec, table, config, options, elapsed_ms());
    }

    if (!std::filesystem::exists(spec))
        throw std::invalid_argument("unknown experiment spec: " + spec);

    std::ifstream in(spec);
    nlohmann::json doc = nlohmann::json::parse(in);
    ExperimentOptions local = options;
    // A manifest file re-runs its embedded config with its recorded knobs.
    if (doc.contains("config") && doc.contains("config_hash")) doc = doc.at("config");
    const auto apply_knobs = [&](const nlohmann::json& j, bool restore_quick) {
        if (j.contains("seed")) local.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("slots")) {
            local.slots = j.at("slots").get<std::uint64_t>();
            local.quick = false;  // explicit slot counts are taken literally
        }
        if (j.contains("replicas")) local.replicas = j.at("replicas").get<int>();
        if (restore_quick && j.contains("quick")) local.quick = j.at("quick").get<bool>();
    };
    if (doc.contains("experiment") &&
        is_builtin_experiment(doc.at("experiment").get<std::string>())) {
        apply_knobs(doc, true);
        return run_experiment(doc.at("experiment").get<std::string>(), local);
    }

    std::string name;
    if (doc.contains("document")) {
        // Config envelope written by a previous run: knobs live at this
        // level, the user document inside.
        apply_knobs(doc, true);
        name = doc.value("experiment", "custom");
        doc = doc.at("document");
    } else {
        apply_knobs(doc, false);
        name = doc.contains("name") ? doc.at("name").get<std::string>()
                                    : std::filesystem::path(spec).stem().string();
    }
    config["experiment"] = name;
    config["document"] = doc;
    config["seed"] = local.seed;
    config["slots"] = local.slots;
    config["quick"] = local.quick;
    config["replicas"] = local.replicas;
    const CsvTable table = run_config_experiment(doc, local);
    return write_experiment(name, table, config, local, elapsed_ms());
}

}  // namespace csched
