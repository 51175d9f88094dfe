#pragma once

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "etamu/etamu.hpp"

namespace etamu::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitSelftestFailed = 1;
inline constexpr int kExitParameter = 2;
inline constexpr int kExitConvergence = 3;

inline constexpr const char* kEnvNodes = "ETAMU_NODES";
inline constexpr const char* kEnvTol = "ETAMU_TOL";

/// A user-facing parameter error tagged with the flag that caused it.
class UsageError : public std::runtime_error {
public:
    UsageError(std::string flag, const std::string& message)
        : std::runtime_error(flag + ": " + message), flag_(std::move(flag)) {}
    const std::string& flag() const noexcept { return flag_; }

private:
    std::string flag_;
};

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_number(std::string_view text, const std::string& flag) {
    double v = 0.0;
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw UsageError(flag, "cannot parse number '" + std::string(text) + "'");
    }
    return v;
}

/// "start:stop:step", inclusive of stop within round-off.
struct GridSpec {
    double start = 0.0;
    double stop = 0.0;
    double step = 0.0;

    static GridSpec parse(std::string_view text, const std::string& flag) {
        const auto c1 = text.find(':');
        const auto c2 = c1 == std::string_view::npos ? c1 : text.find(':', c1 + 1);
        if (c2 == std::string_view::npos || text.find(':', c2 + 1) != std::string_view::npos) {
            throw UsageError(flag, "expected start:stop:step, got '" + std::string(text) + "'");
        }
        GridSpec g{parse_number(text.substr(0, c1), flag), parse_number(text.substr(c1 + 1, c2 - c1 - 1), flag),
                   parse_number(text.substr(c2 + 1), flag)};
        if (!std::isfinite(g.start) || !std::isfinite(g.stop) || !(g.step > 0.0) || !std::isfinite(g.step)) {
            throw UsageError(flag, "start and stop must be finite and step positive");
        }
        if (g.stop < g.start) throw UsageError(flag, "stop must not be below start");
        return g;
    }

    std::vector<double> points() const {
        const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
        std::vector<double> out(count);
        for (std::size_t i = 0; i < count; ++i) out[i] = start + static_cast<double>(i) * step;
        return out;
    }
};

/// "eta=<v>,mu=<v>,snr=<v>" (or snr_db=<v>) under a shared format.
inline FadingBranch parse_branch(std::string_view text, FadingFormat format) {
    const std::string flag = "--branch";
    std::map<std::string, double, std::less<>> kv;
    while (!text.empty()) {
        const auto comma = text.find(',');
        const auto item = text.substr(0, comma);
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) throw UsageError(flag, "expected key=value, got '" + std::string(item) + "'");
        const std::string key(item.substr(0, eq));
        if (key != "eta" && key != "mu" && key != "snr" && key != "snr_db") {
            throw UsageError(flag, "unknown key '" + key + "' (use eta, mu, snr or snr_db)");
        }
        if (!kv.emplace(key, parse_number(item.substr(eq + 1), flag)).second) {
            throw UsageError(flag, "duplicate key '" + key + "'");
        }
        text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    }
    if (!kv.count("eta") || !kv.count("mu")) throw UsageError(flag, "eta and mu are required");
    if (kv.count("snr") + kv.count("snr_db") != 1) throw UsageError(flag, "give exactly one of snr or snr_db");
    const double snr = kv.count("snr") ? kv.at("snr") : db_to_linear(kv.at("snr_db"));
    try {
        return validate_branch({format, kv.at("eta"), kv.at("mu"), snr});
    } catch (const ParameterOutOfRange& e) {
        throw UsageError(flag, e.what());
    }
}

inline std::string flag_for_field(const std::string& field) {
    if (field == "eta" || field == "mu" || field == "mean_snr" || field == "branches") return "--branch";
    if (field == "nodes" || field == "max_nodes") return "--nodes";
    if (field == "target_abs_tol") return "--tol";
    if (field == "target_rel_tol") return "--rel-tol";
    if (field == "mod" || field == "p" || field == "q") return "--mod";
    if (field == "n") return "--samples";
    if (field == "snr_db") return "--snr-db";
    return "--grid";
}

/// Evaluates f(i) for i in [0, n) on up to `threads` workers; results keep index order.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, unsigned threads, F f) {
    std::vector<T> out(n);
    std::vector<std::exception_ptr> failures(n);
    auto work = [&](std::size_t first, std::size_t stride) {
        for (std::size_t i = first; i < n; i += stride) {
            try {
                out[i] = f(i);
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };
    threads = static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(threads, n)));
    if (threads == 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : failures) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

struct SelftestCheck {
    std::string name;
    double error;
    double tolerance;
    bool passed() const { return error <= tolerance; }
};

inline MrcChannel selftest_channel(int L) {
    const double mus[] = {1.0, 1.5, 2.0, 3.5, 4.5};
    std::vector<FadingBranch> b;
    for (int i = 0; i < L; ++i) b.push_back({FadingFormat::Format1, 1.2, mus[i], 1.0});
    return MrcChannel(b);
}

/// Identity and oracle-equivalence checks; each entry reports worst error and tolerance.
inline std::vector<SelftestCheck> run_selftest(const InversionConfig& cfg) {
    std::vector<SelftestCheck> checks;
    const std::vector<MrcChannel> channels = {
        selftest_channel(1), selftest_channel(3), selftest_channel(5),
        MrcChannel{{FadingFormat::Format2, -0.4, 0.8, 2.0}, {FadingFormat::Format1, 3.0, 1.25, 0.5}}};

    double identity = 0.0;
    double agreement = 0.0;
    for (const auto& ch : channels) {
        for (const auto& m : {ModulationScheme::dbpsk(), ModulationScheme::nbfsk()}) {
            const double exact = 0.5 * mgf(ch, m.q).real();
            identity = std::max(identity, std::abs(avg_ber_quadrature(ch, m, cfg).value - exact));
            identity = std::max(identity, std::abs(avg_ber_contour(ch, m, cfg).value - exact));
        }
        for (const auto& m : preset_modulations()) {
            agreement = std::max(agreement,
                                 std::abs(avg_ber_quadrature(ch, m, cfg).value - avg_ber_contour(ch, m, cfg).value));
        }
    }
    checks.push_back({"ber_unit_shape_identity", identity, 1e-10});
    checks.push_back({"ber_contour_vs_quadrature", agreement, 1e-8});

    double pdf_err = 0.0;
    double cdf_err = 0.0;
    for (int L : {2, 3, 5}) {
        const auto ch = selftest_channel(L);
        const auto dec = gamma_decomposition(ch);
        for (int i = 1; i <= 25; ++i) {
            const double y = 3.0 * L * i / 25.0;
            pdf_err = std::max(pdf_err, std::abs(pdf_sum(ch, y, cfg).value - gamma_sum_pdf(dec.shapes, dec.scales, y)));
            cdf_err = std::max(cdf_err, std::abs(cdf_sum(ch, y, cfg).value - gamma_sum_cdf(dec.shapes, dec.scales, y)));
        }
    }
    checks.push_back({"pdf_sum_vs_gamma_series", pdf_err, 1e-8});
    checks.push_back({"cdf_sum_vs_gamma_series", cdf_err, 1e-8});

    double single = 0.0;
    const FadingBranch singles[] = {{FadingFormat::Format1, 0.3, 0.75, 1.0},
                                    {FadingFormat::Format1, 4.0, 2.0, 2.5},
                                    {FadingFormat::Format2, 0.5, 1.0, 1.0},
                                    {FadingFormat::Format2, -0.7, 3.0, 0.5}};
    for (const auto& b : singles) {
        const MrcChannel ch{b};
        for (int i = 1; i <= 20; ++i) {
            const double y = 4.0 * b.mean_snr * i / 20.0;
            single = std::max(single, std::abs(pdf_sum_contour(ch, y, cfg).value - pdf_single_closed(b, y)));
        }
    }
    checks.push_back({"single_branch_contour_vs_closed_form", single, 1e-10});

    double reduction = 0.0;
    for (double mu : {0.5, 1.0, 2.5}) {
        const FadingBranch b{FadingFormat::Format1, 1.0, mu, 1.5};
        for (int i = 1; i <= 20; ++i) {
            const double y = 0.25 * i;
            reduction = std::max(reduction,
                                 std::abs(pdf_single_closed(b, y) - detail::gamma_density(2.0 * mu, 1.5 / (2.0 * mu), y)));
        }
    }
    checks.push_back({"equal_power_gamma_reduction", reduction, 1e-10});
    return checks;
}

class CsvSink {
public:
    CsvSink(const std::string& path, std::ostream& stdout_stream) : path_(path), out_(&stdout_stream) {
        if (!path_.empty() && path_ != "-") {
            file_.open(path_, std::ios::binary | std::ios::trunc);
            if (!file_) throw UsageError("--output", "cannot open '" + path_ + "' for writing");
            out_ = &file_;
        }
    }

    void header(const std::vector<std::string>& cols) { row(cols); }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) *out_ << ',';
            *out_ << cells[i];
        }
        *out_ << '\n';
    }

    void finish() { out_->flush(); }

    /// Closes and removes a file output.
    void discard() {
        if (file_.is_open()) {
            file_.close();
            std::error_code ec;
            std::filesystem::remove(path_, ec);
        }
    }

private:
    std::string path_;
    std::ostream* out_;
    std::ofstream file_;
};

struct Options {
    int format = 1;
    std::vector<std::string> branches;
    std::string grid;
    std::string snr_db_grid = "0:20:1";
    std::vector<std::string> mods;
    std::optional<int> nodes;
    std::optional<double> tol;
    std::optional<double> rel_tol;
    std::string method = "talbot";
    std::uint64_t seed = 1;
    std::size_t samples = 1000000;
    std::string output = "-";
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
};

inline std::optional<std::string> env_value(const char* name) {
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
}

/// Flag values win over environment variables, which win over built-in defaults.
inline InversionConfig build_config(const Options& o) {
    InversionConfig cfg;
    if (o.nodes) {
        cfg.nodes = *o.nodes;
    } else if (auto env = env_value(kEnvNodes)) {
        const double v = parse_number(*env, kEnvNodes);
        if (v != std::floor(v) || v < 8 || v > 1 << 20) throw UsageError(kEnvNodes, "expected an even integer >= 8");
        cfg.nodes = static_cast<int>(v);
    }
    cfg.max_nodes = std::max(cfg.max_nodes, 4 * cfg.nodes);
    if (o.tol) {
        cfg.target_abs_tol = *o.tol;
    } else if (auto env = env_value(kEnvTol)) {
        cfg.target_abs_tol = parse_number(*env, kEnvTol);
        if (!(cfg.target_abs_tol > 0.0)) throw UsageError(kEnvTol, "tolerance must be positive");
    }
    if (o.rel_tol) cfg.target_rel_tol = *o.rel_tol;
    if (o.method == "talbot") {
        cfg.method = ContourMethod::FixedTalbot;
    } else if (o.method == "vertical") {
        cfg.method = ContourMethod::VerticalLine;
    } else {
        throw UsageError("--method", "expected talbot or vertical");
    }
    try {
        validate_config(cfg);
    } catch (const ParameterOutOfRange& e) {
        throw UsageError(flag_for_field(e.field()), e.what());
    }
    return cfg;
}

inline MrcChannel build_channel(const Options& o) {
    if (o.branches.empty()) throw UsageError("--branch", "at least one branch is required");
    const FadingFormat f = o.format == 1 ? FadingFormat::Format1 : FadingFormat::Format2;
    std::vector<FadingBranch> b;
    for (const auto& text : o.branches) b.push_back(parse_branch(text, f));
    return MrcChannel(std::move(b));
}

inline std::vector<ModulationScheme> build_mods(const Options& o, bool default_all) {
    std::vector<ModulationScheme> out;
    for (const auto& text : o.mods) {
        try {
            out.push_back(parse_modulation(text));
        } catch (const ParameterOutOfRange& e) {
            throw UsageError("--mod", e.what());
        }
    }
    if (out.empty()) {
        if (!default_all) throw UsageError("--mod", "a modulation is required");
        out = preset_modulations();
    }
    return out;
}

inline std::string column_name(const ModulationScheme& m) {
    if (m.name != "custom") return m.name;
    return "p" + format_double(m.p) + "_q" + format_double(m.q);
}

inline std::vector<double> build_grid(const Options& o, bool positive) {
    if (o.grid.empty()) throw UsageError("--grid", "a grid start:stop:step is required");
    const auto g = GridSpec::parse(o.grid, "--grid");
    if (g.start < 0.0 || (positive && g.start <= 0.0)) {
        throw UsageError("--grid", positive ? "grid must start above 0" : "grid must start at or above 0");
    }
    return g.points();
}

/// Parses `args` (without the program name) and executes one subcommand.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Statistics and link performance of eta-mu fading with maximal-ratio combining", "etamu"};
    app.set_help_all_flag("--help-all", "Show help for every subcommand");
    app.require_subcommand(1);

    auto add_channel = [&](CLI::App* sub) {
        sub->add_option("--format", o.format, "Parameter format shared by all branches (1 or 2)")
            ->check(CLI::IsMember({1, 2}));
        sub->add_option("--branch", o.branches, "Branch spec eta=<v>,mu=<v>,snr=<v> (or snr_db=<v>); repeat per branch")
            ->required()
            ->take_all();
    };
    auto add_inversion = [&](CLI::App* sub) {
        sub->add_option("--nodes", o.nodes, std::string("Base contour node count (env ") + kEnvNodes + ", default 32)");
        sub->add_option("--tol", o.tol, std::string("Absolute error target (env ") + kEnvTol + ", default 1e-10)");
        sub->add_option("--rel-tol", o.rel_tol, "Relative error target (default 0; ber-curve 1e-7)");
        sub->add_option("--method", o.method, "Contour: talbot or vertical")->check(CLI::IsMember({"talbot", "vertical"}));
    };
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-o,--output", o.output, "Output CSV path ('-' for stdout)");
        sub->add_option("--threads", o.threads, "Worker threads for grid points and sampling")
            ->check(CLI::Range(1u, 4096u));
    };

    auto* pdf = app.add_subcommand("pdf", "Density of the combined SNR on a grid");
    auto* cdf = app.add_subcommand("cdf", "Distribution function of the combined SNR on a grid");
    auto* outage = app.add_subcommand("outage", "Outage probability at each threshold of a grid");
    for (auto* sub : {pdf, cdf, outage}) {
        add_channel(sub);
        sub->add_option("--grid", o.grid, "Evaluation grid start:stop:step (linear SNR)")->required();
        add_inversion(sub);
        add_common(sub);
    }

    auto* ber = app.add_subcommand("ber", "Average BER, by quadrature and by contour");
    add_channel(ber);
    ber->add_option("--mod", o.mods, "cbfsk, cbpsk, nbfsk, dbpsk or p,q; repeatable (default: all presets)")
        ->take_all();
    add_inversion(ber);
    add_common(ber);

    auto* curve = app.add_subcommand("ber-curve", "Average BER versus per-branch mean SNR in dB");
    add_channel(curve);
    curve->add_option("--snr-db", o.snr_db_grid, "Per-branch mean SNR grid in dB, start:stop:step")
        ->capture_default_str();
    curve->add_option("--mod", o.mods, "Columns: cbfsk, cbpsk, nbfsk, dbpsk or p,q; repeatable (default: all presets)")
        ->take_all();
    add_inversion(curve);
    add_common(curve);

    auto* sim = app.add_subcommand("simulate", "Monte Carlo empirical CDF and histogram density");
    add_channel(sim);
    sim->add_option("--grid", o.grid, "Evaluation grid start:stop:step (linear SNR)")->required();
    sim->add_option("--samples", o.samples, "Number of samples")->capture_default_str()->check(CLI::PositiveNumber);
    sim->add_option("--seed", o.seed, "Random seed")->capture_default_str();
    add_common(sim);

    auto* self = app.add_subcommand("selftest", "Run the identity and oracle-equivalence checks");
    add_inversion(self);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        if (app.get_subcommands().empty()) {
            out << app.help("", CLI::AppFormatMode::All);
            return kExitOk;
        }
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitParameter;
    }

    std::optional<CsvSink> sink;
    try {
        const InversionConfig cfg = build_config(o);

        if (self->parsed()) {
            bool all = true;
            for (const auto& c : run_selftest(cfg)) {
                all = all && c.passed();
                out << (c.passed() ? "PASS " : "FAIL ") << c.name << " max_err=" << format_double(c.error)
                    << " tol=" << format_double(c.tolerance) << '\n';
            }
            return all ? kExitOk : kExitSelftestFailed;
        }

        const MrcChannel channel = build_channel(o);

        if (pdf->parsed() || cdf->parsed() || outage->parsed()) {
            const auto ys = build_grid(o, pdf->parsed());
            sink.emplace(o.output, out);
            auto rows = parallel_map<EvalResult>(ys.size(), o.threads, [&](std::size_t i) {
                if (pdf->parsed()) return pdf_sum(channel, ys[i], cfg);
                return cdf_sum(channel, ys[i], cfg);
            });
            const char* name = pdf->parsed() ? "pdf" : cdf->parsed() ? "cdf" : "outage";
            sink->header({outage->parsed() ? "y_th" : "y", name, "abs_err_est"});
            for (std::size_t i = 0; i < ys.size(); ++i) {
                sink->row({format_double(ys[i]), format_double(rows[i].value), format_double(rows[i].abs_err_est)});
            }
        } else if (ber->parsed()) {
            const auto mods = build_mods(o, true);
            sink.emplace(o.output, out);
            auto rows = parallel_map<std::pair<EvalResult, EvalResult>>(mods.size(), o.threads, [&](std::size_t i) {
                return std::make_pair(avg_ber_quadrature(channel, mods[i], cfg), avg_ber_contour(channel, mods[i], cfg));
            });
            sink->header({"mod", "p", "q", "ber", "abs_err_est", "ber_contour", "contour_abs_err_est"});
            for (std::size_t i = 0; i < mods.size(); ++i) {
                sink->row({column_name(mods[i]), format_double(mods[i].p), format_double(mods[i].q),
                           format_double(rows[i].first.value), format_double(rows[i].first.abs_err_est),
                           format_double(rows[i].second.value), format_double(rows[i].second.abs_err_est)});
            }
        } else if (curve->parsed()) {
            const auto mods = build_mods(o, true);
            const auto dbs = GridSpec::parse(o.snr_db_grid, "--snr-db").points();
            InversionConfig curve_cfg = cfg;
            if (!o.tol && !env_value(kEnvTol)) curve_cfg.target_abs_tol = std::numeric_limits<double>::min();
            if (!o.rel_tol) curve_cfg.target_rel_tol = 1e-7;
            sink.emplace(o.output, out);
            std::vector<std::vector<BerPoint>> columns;
            for (const auto& m : mods) columns.push_back(ber_curve(channel, m, dbs, curve_cfg, o.threads));
            std::vector<std::string> head{"snr_db"};
            for (const auto& m : mods) head.push_back(column_name(m));
            sink->header(head);
            for (std::size_t i = 0; i < dbs.size(); ++i) {
                std::vector<std::string> cells{format_double(dbs[i])};
                for (const auto& col : columns) cells.push_back(format_double(col[i].ber));
                sink->row(cells);
            }
        } else if (sim->parsed()) {
            const auto ys = build_grid(o, false);
            sink.emplace(o.output, out);
            const auto summary = simulate_mrc(channel, o.samples, RngStream(o.seed, 0), o.threads);
            const double half = ys.size() > 1 ? 0.5 * (ys[1] - ys[0]) : 0.5 * GridSpec::parse(o.grid, "--grid").step;
            sink->header({"y", "ecdf", "hist_density"});
            for (double y : ys) {
                const double lo = std::max(0.0, y - half);
                sink->row({format_double(y), format_double(summary.ecdf(y)),
                           format_double(summary.histogram_density(lo, y + half))});
            }
            err << "samples=" << summary.n << " mean=" << format_double(summary.mean)
                << " variance=" << format_double(summary.variance) << '\n';
        }
        if (sink) sink->finish();
        return kExitOk;
    } catch (const UsageError& e) {
        if (sink) sink->discard();
        err << "error: " << e.what() << "\n";
        return kExitParameter;
    } catch (const ParameterOutOfRange& e) {
        if (sink) sink->discard();
        err << "error: " << flag_for_field(e.field()) << ": " << e.what() << "\n";
        return kExitParameter;
    } catch (const ConvergenceFailure& e) {
        if (sink) sink->discard();
        err << "error: convergence failure: " << e.what() << "\n";
        return kExitConvergence;
    } catch (const Error& e) {
        if (sink) sink->discard();
        err << "error: " << e.what() << "\n";
        return kExitParameter;
    }
}

}  // namespace etamu::cli
