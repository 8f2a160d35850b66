#include "dydw/cli.hpp"

#include <chrono>
#include <concepts>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dydw/arrow_field.hpp"
#include "dydw/boxes_events.hpp"
#include "dydw/dynamical_sweep.hpp"
#include "dydw/experiments.hpp"
#include "dydw/numerics.hpp"
#include "dydw/parallel.hpp"
#include "dydw/rng.hpp"
#include "dydw/stats.hpp"
#include "dydw/sticky_pair.hpp"

namespace fs = std::filesystem;

namespace dydw {

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "NaN";
    if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

namespace {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Cell {
    std::string text;
    Cell(double v) : text(format_double(v)) {}                          // NOLINT
    template <std::integral T>
    Cell(T v) : text(std::to_string(v)) {}                               // NOLINT
    Cell(const std::string& v) : text(v) {}                              // NOLINT
    Cell(const char* v) : text(v) {}                                     // NOLINT
};

class Csv {
public:
    explicit Csv(std::vector<std::string> header) : cols_(header.size()) { row_raw(header); }
    void row(const std::vector<Cell>& cells) {
        std::vector<std::string> v;
        for (const auto& c : cells) v.push_back(c.text);
        row_raw(v);
    }
    [[nodiscard]] std::string str() const { return buf_.str(); }

private:
    void row_raw(const std::vector<std::string>& v) {
        if (v.size() != cols_) throw std::logic_error("csv row width mismatch");
        for (std::size_t i = 0; i < v.size(); ++i) buf_ << (i ? "," : "") << csv_field(v[i]);
        buf_ << '\n';
    }
    std::size_t cols_;
    std::ostringstream buf_;
};

std::string json_scalar_csv(const ojson& v) {
    if (v.is_null()) return "NA";
    if (v.is_number_float()) return format_double(v.get<double>());
    if (v.is_string()) return v.get<std::string>();
    if (v.is_array()) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + json_scalar_csv(v[i]);
        return s;
    }
    return v.dump();
}

/// Flat JSON objects as CSV; the header is the union of keys in first-seen order.
std::string cells_csv(const ojson& cells) {
    std::vector<std::string> keys;
    std::set<std::string> seen;
    for (const auto& c : cells)
        for (const auto& [k, _] : c.items())
            if (seen.insert(k).second) keys.push_back(k);
    Csv csv(keys.empty() ? std::vector<std::string>{"empty"} : keys);
    for (const auto& c : cells) {
        std::vector<Cell> row;
        for (const auto& k : keys) row.emplace_back(c.contains(k) ? json_scalar_csv(c[k]) : std::string());
        csv.row(row);
    }
    return csv.str();
}

std::string echo_value(const ojson& v) {
    if (v.is_array()) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + echo_value(v[i]);
        return s;
    }
    if (v.is_number_float()) return format_double(v.get<double>());
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

struct Common {
    std::uint64_t seed = 1;
    int workers = 1;
    std::string out;
    std::string config;
};

struct Outputs {
    std::vector<std::pair<std::string, std::string>> files;
    bool gates_failed = false;
    void add(std::string name, std::string content) { files.emplace_back(std::move(name), std::move(content)); }
};

struct Command {
    std::vector<std::string> path;  // subcommand path, e.g. {"experiment", "tameness"}
    CLI::App* app = nullptr;
    Common common;
    std::function<ojson()> echo;
    std::function<void(const Common&, Outputs&)> run;
};

std::map<std::string, std::string> load_config(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot read config file '" + file + "'");
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            if (a == std::string::npos) return std::string();
            const auto b = s.find_last_not_of(" \t\r");
            return s.substr(a, b - a + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw CLI::ParseError("config line " + std::to_string(lineno) + ": expected key = value", kExitUsage);
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

/// Splices config-file entries into the argument list, skipping keys given as flags.
std::vector<std::string> apply_config(const std::vector<std::string>& args) {
    std::string file;
    std::set<std::string> given;
    std::size_t first_flag = args.size();
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a.rfind("--", 0) != 0) continue;
        first_flag = std::min(first_flag, i);
        const auto eq = a.find('=');
        const std::string name = a.substr(2, eq == std::string::npos ? std::string::npos : eq - 2);
        given.insert(name);
        if (name == "config") file = eq != std::string::npos ? a.substr(eq + 1) : (i + 1 < args.size() ? args[i + 1] : "");
    }
    if (file.empty()) return args;
    std::vector<std::string> out(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(first_flag));
    for (const auto& [k, v] : load_config(file))
        if (!given.count(k)) out.push_back("--" + k + "=" + v);
    out.insert(out.end(), args.begin() + static_cast<std::ptrdiff_t>(first_flag), args.end());
    return out;
}

void add_common(CLI::App* app, Common& c) {
    app->add_option("--seed", c.seed, "Global seed")->capture_default_str();
    app->add_option("--workers", c.workers, "Worker threads; outputs do not depend on it")->capture_default_str();
    app->add_option("--out", c.out, "Output directory (default: $DYDW_OUTPUT_DIR or .)");
    app->add_option("--config", c.config, "Config file of key = value lines; flags override it");
}

template <class T>
void check(bool ok, const T& what) {
    if (!ok) throw PreconditionError(what);
}

std::string write_outputs(const fs::path& dir, const Outputs& outs, ojson& manifest_outputs) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
    for (const auto& [name, content] : outs.files) {
        const fs::path p = dir / name;
        std::ofstream f(p, std::ios::binary);
        if (!f) throw IoError("cannot write '" + p.string() + "'");
        f << content;
        f.close();
        if (!f) throw IoError("write failed for '" + p.string() + "'");
        manifest_outputs.push_back({{"file", name}, {"bytes", content.size()}, {"fnv1a64", hex64(fnv1a64(content))}});
    }
    return dir.string();
}

int replay(const std::string& manifest_path, const std::string& out_dir, std::ostream& out, std::ostream& err);

int dispatch(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dynamical discrete web simulation and numerics toolkit", "dydw"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);
    std::vector<Command> commands;
    commands.reserve(16);

    // solve
    struct {
        std::vector<double> k{1.0};
        double gamma0 = 16.0;
        double tol = 1e-12;
    } solve;
    {
        Command& c = commands.emplace_back();
        c.path = {"solve"};
        c.app = app.add_subcommand("solve", "gamma(K), p(K) and dimension bounds");
        c.app->add_option("--k", solve.k, "K values (comma separated)")->delimiter(',')->capture_default_str();
        c.app->add_option("--gamma0", solve.gamma0, "gamma_0 used by the lower bound")->capture_default_str();
        c.app->add_option("--tol", solve.tol, "Residual tolerance for p(K)")->capture_default_str();
        add_common(c.app, c.common);
        c.echo = [&] { return ojson{{"k", solve.k}, {"gamma0", solve.gamma0}, {"tol", solve.tol}}; };
        c.run = [&](const Common&, Outputs& o) {
            check(!solve.k.empty(), "solve: --k needs at least one value");
            check(solve.gamma0 > 1.0, "solve: --gamma0 must exceed 1");
            check(solve.tol > 0.0, "solve: --tol must be positive");
            Csv csv({"K", "gamma", "gamma_residual", "p", "log_p", "p_residual", "p_iterations", "series_tail_bound",
                     "dim_lower", "dim_upper"});
            for (double K : solve.k) {
                check(K > 0.0 && std::isfinite(K), "solve: K must be positive");
                const SolverResult g = gamma_of_K(K);
                const SolverResult p = p_of_K(K, solve.tol);
                const auto dl = dim_lower(K, solve.gamma0);
                csv.row({K, g.value, g.residual, p.value, p.log_value, p.residual, p.iterations, p.tail_bound,
                         dl ? Cell(*dl) : Cell("NA"), -std::expm1(p.log_value)});
            }
            o.add("solve.csv", csv.str());
        };
    }

    // survival
    struct {
        double k = 1.0;
        double j = 1.0;
        std::int64_t n = 1000;
        double eps = 0.0;
        std::string drift_model = "exponential";
        std::int64_t stride = 1;
    } surv;
    {
        Command& c = commands.emplace_back();
        c.path = {"survival"};
        c.app = app.add_subcommand("survival", "Survival above -j - K sqrt(n) by exact dynamic programming");
        c.app->add_option("--k", surv.k, "Boundary slope K")->capture_default_str();
        c.app->add_option("--j", surv.j, "Boundary offset j")->capture_default_str();
        c.app->add_option("--n", surv.n, "Horizon")->capture_default_str();
        c.app->add_option("--eps", surv.eps, "Drift epsilon (0 = symmetric walk)")->capture_default_str();
        c.app->add_option("--drift-model", surv.drift_model, "exponential or linear")->capture_default_str();
        c.app->add_option("--stride", surv.stride, "Write every stride-th row (the last row is always written)")
            ->capture_default_str();
        add_common(c.app, c.common);
        c.echo = [&] {
            return ojson{{"k", surv.k}, {"j", surv.j}, {"n", surv.n}, {"eps", surv.eps},
                         {"drift-model", surv.drift_model}, {"stride", surv.stride}};
        };
        c.run = [&](const Common&, Outputs& o) {
            check(surv.k >= 0.0 && surv.j >= 0.0, "survival: --k and --j must be nonnegative");
            check(surv.n >= 1, "survival: --n must be at least 1");
            check(surv.eps >= 0.0, "survival: --eps must be nonnegative");
            check(surv.stride >= 1, "survival: --stride must be at least 1");
            const DriftModel model = parse_drift_model(surv.drift_model);
            const SurvivalTable t = surv.eps == 0.0 ? survival_symmetric(surv.k, surv.j, surv.n)
                                                    : survival_drifted_dp(surv.eps, surv.k, surv.n, model, surv.j);
            Csv csv({"K", "j", "eps", "n", "survival", "lower", "upper"});
            for (std::int64_t n = 0; n <= surv.n; ++n) {
                if (n % surv.stride != 0 && n != surv.n) continue;
                const auto i = static_cast<std::size_t>(n);
                csv.row({surv.k, surv.j, surv.eps, n, t.lower[i], t.lower[i], t.upper[i]});
            }
            o.add("survival.csv", csv.str());
            if (surv.eps > 0.0) {
                Csv inf({"K", "j", "eps", "N", "drift_model", "dp_lower", "dp_upper", "reweight_lower",
                         "reweight_upper"});
                const ReweightResult rw = survival_drifted_reweight(surv.eps, surv.k, surv.n, model, surv.j);
                inf.row({surv.k, surv.j, surv.eps, surv.n, to_string(model), t.infinite_lower, t.infinite_upper,
                         rw.lower, rw.upper});
                o.add("survival_infinite.csv", inf.str());
            }
        };
    }

    // sweep
    struct {
        std::string predicate = "En";
        double k = 6.0;
        int boxes = 3;
        double tau_max = 1.0;
        std::int64_t replicates = 10;
        std::int64_t max_steps = 0;
        double j = 1.0;
        double k2 = 1.0;
        std::int64_t horizon = 100;
        std::int64_t level = 4;
    } sw;
    {
        Command& c = commands.emplace_back();
        c.path = {"sweep"};
        c.app = app.add_subcommand("sweep", "Exact dynamical-time sweeps of path predicates");
        c.app->add_option("--predicate", sw.predicate, "En, confinement, barrier or exceedance")->capture_default_str();
        c.app->add_option("--k", sw.k, "K (E_n slope, or lower slope K1 for confinement)")->capture_default_str();
        c.app->add_option("--boxes", sw.boxes, "Number of boxes n for E_n")->capture_default_str();
        c.app->add_option("--tau-max", sw.tau_max, "Dynamical time range [0, tau_max)")->capture_default_str();
        c.app->add_option("--replicates", sw.replicates, "Independent fields")->capture_default_str();
        c.app->add_option("--max-steps", sw.max_steps, "Per-replicate path-step budget (0 = none)")->capture_default_str();
        c.app->add_option("--j", sw.j, "Confinement offset j")->capture_default_str();
        c.app->add_option("--k2", sw.k2, "Confinement upper slope K2")->capture_default_str();
        c.app->add_option("--horizon", sw.horizon, "Horizon for confinement, barrier and exceedance")->capture_default_str();
        c.app->add_option("--level", sw.level, "Level for barrier and exceedance predicates")->capture_default_str();
        add_common(c.app, c.common);
        c.echo = [&] {
            return ojson{{"predicate", sw.predicate}, {"k", sw.k},         {"boxes", sw.boxes},
                         {"tau-max", sw.tau_max},     {"replicates", sw.replicates}, {"max-steps", sw.max_steps},
                         {"j", sw.j},                 {"k2", sw.k2},       {"horizon", sw.horizon},
                         {"level", sw.level}};
        };
        c.run = [&](const Common& cm, Outputs& o) {
            check(sw.tau_max > 0.0 && std::isfinite(sw.tau_max), "sweep: --tau-max must be positive");
            check(sw.replicates >= 1, "sweep: --replicates must be at least 1");
            check(sw.max_steps >= 0, "sweep: --max-steps must be nonnegative");
            PredicateSpec spec;
            const bool en = sw.predicate == "En";
            if (en) {
                check(sw.k > 0.0 && sw.boxes >= 0, "sweep: E_n needs --k > 0 and --boxes >= 0");
            } else if (sw.predicate == "confinement") {
                spec = confinement_spec(sw.j, sw.k, sw.k2, sw.horizon);
            } else if (sw.predicate == "barrier") {
                spec = lower_barrier_spec(sw.level, sw.horizon);
            } else if (sw.predicate == "exceedance") {
                spec = exceedance_spec(sw.level, sw.horizon);
            } else {
                throw PreconditionError("sweep: unknown --predicate '" + sw.predicate + "'");
            }
            struct Result {
                TauIntervalSet set;
                SweepStats stats;
                bool censored = false;
            };
            std::vector<Result> res(static_cast<std::size_t>(sw.replicates));
            parallel_for(sw.replicates, cm.workers, [&](std::int64_t i) {
                Result& r = res[static_cast<std::size_t>(i)];
                const ArrowField field(derive_seed(cm.seed, 7, static_cast<std::uint64_t>(i)), sw.tau_max);
                SweepOptions opts;
                opts.max_path_steps = sw.max_steps;
                try {
                    r.set = en ? exceptional_set_En(field, sw.k, sw.boxes, sw.tau_max, &r.stats, opts)
                               : sweep_predicate(field, spec, sw.tau_max, &r.stats, opts);
                } catch (const BudgetError&) {
                    r.censored = true;
                    r.set = TauIntervalSet();
                }
            });
            Csv iv({"replicate_id", "a", "b"});
            Csv sum({"replicate_id", "measure", "intervals", "events", "flips", "steps_traced", "censored"});
            for (std::size_t i = 0; i < res.size(); ++i) {
                const auto id = static_cast<std::int64_t>(i);
                for (const auto& x : res[i].set.intervals()) iv.row({id, x.a, x.b});
                sum.row({id, measure(res[i].set), res[i].set.size(), res[i].stats.events, res[i].stats.flips,
                         res[i].stats.steps_traced, res[i].censored ? 1 : 0});
            }
            o.add("intervals.csv", iv.str());
            o.add("summary.csv", sum.str());
        };
    }

    // sticky
    struct {
        double s = 0.6931471805599453;
        double kappa = 0.0;
        double delta = 1.0;
        std::string convention = "sqrt2";
        std::int64_t horizon = 200;
        std::int64_t replicates = 1000;
        std::string mode = "both";
        std::vector<std::int64_t> times{10, 50, 200};
    } st;
    {
        Command& c = commands.emplace_back();
        c.path = {"sticky"};
        c.app = app.add_subcommand("sticky", "Sticky-pair sampler and directly coupled pairs");
        c.app->add_option("--s", st.s, "Stick parameter |tau - tau'|")->capture_default_str();
        c.app->add_option("--kappa", st.kappa, "If > 0, derive s from kappa and delta")->capture_default_str();
        c.app->add_option("--delta", st.delta, "Lattice scale for the kappa conversion")->capture_default_str();
        c.app->add_option("--convention", st.convention, "kappa conversion: sqrt2 or two")->capture_default_str();
        c.app->add_option("--horizon", st.horizon, "Number of steps")->capture_default_str();
        c.app->add_option("--replicates", st.replicates, "Replicates")->capture_default_str();
        c.app->add_option("--mode", st.mode, "sticky, direct or both")->capture_default_str();
        c.app->add_option("--times", st.times, "Coincidence checkpoints")->delimiter(',')->capture_default_str();
        add_common(c.app, c.common);
        c.echo = [&] {
            return ojson{{"s", st.s},           {"kappa", st.kappa},         {"delta", st.delta},
                         {"convention", st.convention}, {"horizon", st.horizon}, {"replicates", st.replicates},
                         {"mode", st.mode},     {"times", st.times}};
        };
        c.run = [&](const Common& cm, Outputs& o) {
            check(st.horizon >= 1 && st.replicates >= 2, "sticky: need --horizon >= 1 and --replicates >= 2");
            check(st.mode == "sticky" || st.mode == "direct" || st.mode == "both", "sticky: unknown --mode");
            double s = st.s;
            if (st.kappa > 0.0) {
                check(st.convention == "sqrt2" || st.convention == "two", "sticky: unknown --convention");
                s = stick_parameter(st.kappa, st.delta, st.convention == "two" ? StickConvention::two : StickConvention::sqrt2);
            }
            check(s >= 0.0 && std::isfinite(s), "sticky: s must be nonnegative");
            std::vector<std::int64_t> ts;
            for (auto t : st.times) {
                check(t >= 0, "sticky: --times must be nonnegative");
                if (t <= st.horizon) ts.push_back(t);
            }
            const std::size_t T = ts.size();
            const auto R = static_cast<std::size_t>(st.replicates);
            const bool do_sticky = st.mode != "direct";
            const bool do_direct = st.mode != "sticky";
            std::vector<double> data(R * 2 * (T + 3), 0.0);
            parallel_for(st.replicates, cm.workers, [&](std::int64_t i) {
                const auto iu = static_cast<std::size_t>(i);
                const auto H = static_cast<std::size_t>(st.horizon);
                const auto fill = [&](double* row, const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
                    for (std::size_t c = 0; c < T; ++c)
                        row[c] = a[static_cast<std::size_t>(ts[c])] == b[static_cast<std::size_t>(ts[c])] ? 1.0 : 0.0;
                    const auto x = static_cast<double>(a[H]);
                    const auto y = static_cast<double>(b[H]);
                    row[T] = x * y;
                    row[T + 1] = x * x;
                    row[T + 2] = y * y;
                };
                if (do_sticky) {
                    const StickyPairSample sp = sample_sticky_pair(s, st.horizon, derive_seed(cm.seed, 2, iu));
                    fill(&data[(iu * 2) * (T + 3)], sp.S_tau, sp.S_tau_prime);
                }
                if (do_direct) {
                    const ArrowField field(derive_seed(cm.seed, 1, iu), s > 0.0 ? s : 1.0);
                    const auto [p, q] = direct_pair(field, 0.0, s, st.horizon);
                    fill(&data[(iu * 2 + 1) * (T + 3)], p.positions, q.positions);
                }
            });
            Csv coin({"method", "s", "t", "p_hat", "se", "replicates"});
            Csv ends({"method", "s", "horizon", "endpoint_cov", "endpoint_cov_se", "var_tau", "var_tau_se",
                      "var_tau_prime", "var_tau_prime_se", "replicates"});
            for (int m = 0; m < 2; ++m) {
                if ((m == 0 && !do_sticky) || (m == 1 && !do_direct)) continue;
                const char* name = m == 0 ? "sticky" : "direct";
                const auto column = [&](std::size_t c) {
                    std::vector<double> v(R);
                    for (std::size_t i = 0; i < R; ++i) v[i] = data[(i * 2 + static_cast<std::size_t>(m)) * (T + 3) + c];
                    return mean_se(v);
                };
                for (std::size_t c = 0; c < T; ++c) {
                    const MeanSe ms = column(c);
                    coin.row({name, s, ts[c], ms.mean, ms.se, st.replicates});
                }
                const MeanSe cov = column(T);
                const MeanSe va = column(T + 1);
                const MeanSe vb = column(T + 2);
                ends.row({name, s, st.horizon, cov.mean, cov.se, va.mean, va.se, vb.mean, vb.se, st.replicates});
            }
            o.add("coincidence.csv", coin.str());
            o.add("endpoints.csv", ends.str());
        };
    }

    // boxes
    struct {
        double gamma = 3.0;
        double k = 0.0;
        std::vector<int> index{0, 1, 2, 3, 4};
        std::int64_t replicates = 10000;
        std::string method = "bridge";
    } bx;
    {
        Command& c = commands.emplace_back();
        c.path = {"boxes"};
        c.app = app.add_subcommand("boxes", "Box hierarchy and Monte Carlo estimates of P(A_k)");
        c.app->add_option("--gamma", bx.gamma, "Box growth factor gamma > 2")->capture_default_str();
        c.app->add_option("--k", bx.k, "If > 0, use gamma = gamma(K)")->capture_default_str();
        c.app->add_option("--index", bx.index, "Box indices k")->delimiter(',')->capture_default_str();
        c.app->add_option("--replicates", bx.replicates, "Replicates per box")->capture_default_str();
        c.app->add_option("--method", bx.method, "trace, walk or bridge")->capture_default_str();
        add_common(c.app, c.common);
        c.echo = [&] {
            return ojson{{"gamma", bx.gamma}, {"k", bx.k}, {"index", bx.index}, {"replicates", bx.replicates},
                         {"method", bx.method}};
        };
        c.run = [&](const Common& cm, Outputs& o) {
            check(bx.replicates >= 1, "boxes: --replicates must be at least 1");
            check(bx.k >= 0.0, "boxes: --k must be nonnegative");
            const double g = bx.k > 0.0 ? gamma_of_K(bx.k).value : bx.gamma;
            check(g > 2.0, "boxes: gamma must exceed 2");
            const PAkMethod method = parse_pak_method(bx.method);
            Csv csv({"gamma", "k", "d", "x", "t", "replicates", "p_hat", "se", "p_lower", "p_upper", "p_exact",
                     "p_brownian"});
            for (int k : bx.index) {
                check(k >= 0, "boxes: indices must be nonnegative");
                const auto seq = box_sequence(g, k);
                const BoxSpec& b = seq.back();
                const Estimate e = estimate_PAk(g, k, bx.replicates, cm.seed, method, cm.workers);
                csv.row({g, k, dydw::to_string(b.d), dydw::to_string(b.x), dydw::to_string(b.t), bx.replicates, e.p_hat,
                         e.se, e.lower, e.upper, exact_PAk(g, k), brownian_PA()});
            }
            o.add("boxes.csv", csv.str());
        };
    }

    // experiments
    CLI::App* exp = app.add_subcommand("experiment", "Reproducible experiment recipes with statistical gates");
    exp->require_subcommand(1);
    const auto add_report = [](Outputs& o, const ExperimentReport& r) {
        o.add("report.jsonl", r.to_json().dump() + "\n");
        o.add("cells.csv", cells_csv(r.cells));
        o.gates_failed = !r.passed();
    };

    CorrelationDecayConfig cd;
    {
        Command& c = commands.emplace_back();
        c.path = {"experiment", "correlation_decay"};
        c.app = exp->add_subcommand("correlation_decay", "Excess correlation of the scaled event O across dynamical times");
        c.app->add_option("--delta", cd.delta_grid, "Scales delta")->delimiter(',')->capture_default_str();
        c.app->add_option("--s", cd.s_grid, "Stick parameters s")->delimiter(',')->capture_default_str();
        c.app->add_option("--replicates", cd.replicates, "Replicates per cell")->capture_default_str();
        add_common(c.app, c.common);
        c.echo = [&] { return ojson{{"delta", cd.delta_grid}, {"s", cd.s_grid}, {"replicates", cd.replicates}}; };
        c.run = [&, add_report](const Common& cm, Outputs& o) { add_report(o, correlation_decay(cd, cm.seed, cm.workers)); };
    }
    StickyEquivalenceConfig se;
    {
        Command& c = commands.emplace_back();
        c.path = {"experiment", "sticky_equivalence"};
        c.app = exp->add_subcommand("sticky_equivalence", "Directly coupled pair versus sticky decomposition");
        c.app->add_option("--s", se.s, "Stick parameter")->capture_default_str();
        c.app->add_option("--horizon", se.horizon, "Steps")->capture_default_str();
        c.app->add_option("--replicates", se.replicates, "Replicates")->capture_default_str();
        c.app->add_option("--times", se.checkpoints, "Checkpoints")->delimiter(',')->capture_default_str();
        c.app->add_option("--decorrelated-s", se.decorrelated_s, "s from which independence is checked")->capture_default_str();
        add_common(c.app, c.common);
        c.echo = [&] {
            return ojson{{"s", se.s}, {"horizon", se.horizon}, {"replicates", se.replicates},
                         {"times", se.checkpoints}, {"decorrelated-s", se.decorrelated_s}};
        };
        c.run = [&, add_report](const Common& cm, Outputs& o) { add_report(o, sticky_equivalence(se, cm.seed, cm.workers)); };
    }
    EnStatisticsConfig en;
    {
        Command& c = commands.emplace_back();
        c.path = {"experiment", "en_statistics"};
        c.app = exp->add_subcommand("en_statistics", "Measure and nonemptiness of E_n with the mean-measure check");
        c.app->add_option("--k", en.K, "K")->capture_default_str();
        c.app->add_option("--boxes", en.n_boxes, "n")->capture_default_str();
        c.app->add_option("--tau-max", en.tau_max, "tau range")->capture_default_str();
        c.app->add_option("--replicates", en.replicates, "Fields")->capture_default_str();
        c.app->add_option("--max-steps", en.max_path_steps, "Per-replicate path-step budget")->capture_default_str();
        c.app->add_option("--floor-n", en.floor_n, "Enable the nonemptiness floor gate against E_floor_n")->capture_default_str();
        add_common(c.app, c.common);
        c.echo = [&] {
            return ojson{{"k", en.K}, {"boxes", en.n_boxes}, {"tau-max", en.tau_max}, {"replicates", en.replicates},
                         {"max-steps", en.max_path_steps}, {"floor-n", en.floor_n}};
        };
        c.run = [&, add_report](const Common& cm, Outputs& o) { add_report(o, En_statistics(en, cm.seed, cm.workers)); };
    }
    DimensionBoxcountConfig db;
    {
        Command& c = commands.emplace_back();
        c.path = {"experiment", "dimension_boxcount"};
        c.app = exp->add_subcommand("dimension_boxcount", "Box-counting slopes of E_n");
        c.app->add_option("--k", db.K, "K")->capture_default_str();
        c.app->add_option("--n", db.n_list, "Box counts n")->delimiter(',')->capture_default_str();
        c.app->add_option("--tau-max", db.tau_max, "tau range")->capture_default_str();
        c.app->add_option("--replicates", db.replicates, "Fields")->capture_default_str();
        c.app->add_option("--eps", db.eps_grid, "Cover scales eps")->delimiter(',')->capture_default_str();
        c.app->add_option("--gamma0", db.gamma0, "gamma_0 for the lower bound")->capture_default_str();
        c.app->add_option("--max-steps", db.max_path_steps, "Per-replicate path-step budget")->capture_default_str();
        add_common(c.app, c.common);
        c.echo = [&] {
            return ojson{{"k", db.K}, {"n", db.n_list}, {"tau-max", db.tau_max}, {"replicates", db.replicates},
                         {"eps", db.eps_grid}, {"gamma0", db.gamma0}, {"max-steps", db.max_path_steps}};
        };
        c.run = [&, add_report](const Common& cm, Outputs& o) { add_report(o, dimension_boxcount(db, cm.seed, cm.workers)); };
    }
    ProductRatioConfig pr;
    {
        Command& c = commands.emplace_back();
        c.path = {"experiment", "product_ratio"};
        c.app = exp->add_subcommand("product_ratio", "Ratios P(A_k and A_k')/P(A_k)^2 and their product");
        c.app->add_option("--k", pr.K, "K")->capture_default_str();
        c.app->add_option("--s", pr.s_grid, "Stick parameters s")->delimiter(',')->capture_default_str();
        c.app->add_option("--n", pr.n, "Largest box index")->capture_default_str();
        c.app->add_option("--replicates", pr.replicates, "Replicates per cell")->capture_default_str();
        c.app->add_option("--large-s", pr.large_s, "s from which ratios must be near 1")->capture_default_str();
        add_common(c.app, c.common);
        c.echo = [&] {
            return ojson{{"k", pr.K}, {"s", pr.s_grid}, {"n", pr.n}, {"replicates", pr.replicates}, {"large-s", pr.large_s}};
        };
        c.run = [&, add_report](const Common& cm, Outputs& o) { add_report(o, product_ratio_check(pr, cm.seed, cm.workers)); };
    }
    TamenessConfig tm;
    {
        Command& c = commands.emplace_back();
        c.path = {"experiment", "tameness"};
        c.app = exp->add_subcommand("tameness", "Exceedance, drifted-coupling bound and confinement sweeps");
        c.app->add_option("--horizons", tm.horizon_grid, "Horizons")->delimiter(',')->capture_default_str();
        c.app->add_option("--level", tm.level, "Barrier level n")->capture_default_str();
        c.app->add_option("--exceed-level", tm.exceed_level, "Exceedance level")->capture_default_str();
        c.app->add_option("--tau-max", tm.tau_max, "tau range")->capture_default_str();
        c.app->add_option("--cells", tm.cells, "tau grid cells")->capture_default_str();
        c.app->add_option("--replicates", tm.replicates, "Fields")->capture_default_str();
        c.app->add_option("--conf-j", tm.conf_j, "Confinement offset j")->capture_default_str();
        c.app->add_option("--k1", tm.K1, "Confinement lower slope")->capture_default_str();
        c.app->add_option("--k2", tm.K2, "Confinement upper slope")->capture_default_str();
        c.app->add_option("--conf-horizons", tm.conf_horizons, "Confinement horizons")->delimiter(',')->capture_default_str();
        add_common(c.app, c.common);
        c.echo = [&] {
            return ojson{{"horizons", tm.horizon_grid}, {"level", tm.level}, {"exceed-level", tm.exceed_level},
                         {"tau-max", tm.tau_max}, {"cells", tm.cells}, {"replicates", tm.replicates},
                         {"conf-j", tm.conf_j}, {"k1", tm.K1}, {"k2", tm.K2}, {"conf-horizons", tm.conf_horizons}};
        };
        c.run = [&, add_report](const Common& cm, Outputs& o) { add_report(o, tameness_probe(tm, cm.seed, cm.workers)); };
    }

    // replay
    std::string replay_manifest;
    std::string replay_out;
    CLI::App* rp = app.add_subcommand("replay", "Re-run a manifest and compare output checksums");
    rp->add_option("--manifest", replay_manifest, "Path to manifest.json")->required();
    rp->add_option("--out", replay_out, "Directory for the replayed outputs (default: <manifest dir>/replay)");

    std::vector<std::string> args = apply_config(raw_args);
    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    if (rp->parsed()) return replay(replay_manifest, replay_out, out, err);

    for (auto& c : commands) {
        if (!c.app->parsed()) continue;
        check(c.common.workers >= 1, "--workers must be at least 1");
        std::string out_dir = c.common.out;
        if (out_dir.empty()) {
            const char* env = std::getenv("DYDW_OUTPUT_DIR");
            out_dir = env && *env ? env : ".";
        }
        const std::string started = utc_now();
        Outputs outs;
        c.run(c.common, outs);
        ojson config = c.echo();
        config["seed"] = c.common.seed;
        ojson replay_args = ojson::array();
        for (const auto& p : c.path) replay_args.push_back(p);
        for (const auto& [k, v] : config.items()) replay_args.push_back("--" + k + "=" + echo_value(v));
        ojson files = ojson::array();
        write_outputs(out_dir, outs, files);
        ojson manifest;
        manifest["tool"] = "dydw";
        manifest["version"] = kToolVersion;
        std::string sub;
        for (const auto& p : c.path) sub += (sub.empty() ? "" : " ") + p;
        manifest["subcommand"] = sub;
        manifest["argv"] = raw_args;
        manifest["config"] = config;
        manifest["seed"] = c.common.seed;
        manifest["workers"] = c.common.workers;
        manifest["replay_args"] = replay_args;
        manifest["started_at"] = started;
        manifest["finished_at"] = utc_now();
        manifest["outputs"] = files;
        manifest["gates_passed"] = !outs.gates_failed;
        Outputs mf;
        mf.add("manifest.json", manifest.dump(2) + "\n");
        ojson ignored = ojson::array();
        write_outputs(out_dir, mf, ignored);
        for (const auto& f : files) out << "wrote " << (fs::path(out_dir) / f["file"].get<std::string>()).string() << "\n";
        if (outs.gates_failed) {
            err << "error: one or more experiment gates failed (see report.jsonl)\n";
            return kExitGatesFailed;
        }
        return kExitOk;
    }
    err << "error: no subcommand selected\n";
    return kExitUsage;
}

int replay(const std::string& manifest_path, const std::string& out_dir, std::ostream& out, std::ostream& err) {
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot read manifest '" + manifest_path + "'");
    ojson m;
    try {
        m = ojson::parse(in);
    } catch (const ojson::parse_error& e) {
        throw IoError(std::string("malformed manifest: ") + e.what());
    }
    std::vector<std::string> args = m.at("replay_args").get<std::vector<std::string>>();
    const fs::path dir = out_dir.empty() ? fs::path(manifest_path).parent_path() / "replay" : fs::path(out_dir);
    args.push_back("--out=" + dir.string());
    args.push_back("--workers=" + std::to_string(m.value("workers", 1)));
    std::ostringstream sink;
    const int rc = dispatch(args, sink, err);
    if (rc != kExitOk && rc != kExitGatesFailed) return rc;
    bool ok = true;
    for (const auto& f : m.at("outputs")) {
        const std::string name = f.at("file").get<std::string>();
        std::ifstream g(dir / name, std::ios::binary);
        std::stringstream ss;
        ss << g.rdbuf();
        const std::string got = hex64(fnv1a64(ss.str()));
        const std::string want = f.at("fnv1a64").get<std::string>();
        out << name << " " << (got == want ? "match" : "MISMATCH") << " " << got << "\n";
        if (got != want) ok = false;
    }
    if (!ok) {
        err << "error: replay produced different outputs\n";
        return kExitReplayMismatch;
    }
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        return dispatch(args, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const PreconditionError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalidRange;
    } catch (const BudgetError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalidRange;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        err << "error: internal: " << e.what() << "\n";
        return kExitInternal;
    }
}

}  // namespace dydw
