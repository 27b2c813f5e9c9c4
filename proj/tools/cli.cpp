#include "mpotrace/cli.hpp"

#include "mpotrace/errors.hpp"
#include "mpotrace/io.hpp"
#include "mpotrace/lanczos.hpp"
#include "mpotrace/models.hpp"
#include "mpotrace/oracles.hpp"

#include "CLI11.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

namespace mpotrace::cli {

namespace {
    class UsageError : public std::runtime_error {
    public:
        using std::runtime_error::runtime_error;
    };

    using Clock = std::chrono::steady_clock;

    // 0 on the command line means no cap.
    Index cap_or_unbounded(Index v) { return v == 0 ? unbounded : v; }

    json cap_to_json(Index v) { return v == unbounded ? json(nullptr) : json(v); }

    IsingParams checked_params(const IsingParams &p) {
        try {
            p.validate();
        } catch(const DomainError &e) {
            throw UsageError(e.what());
        }
        return p;
    }

    void add_model_flags(CLI::App &cmd, IsingParams &p) {
        cmd.add_option("--L", p.L, "Number of sites")->required();
        cmd.add_option("--J", p.J, "Coupling")->capture_default_str();
        cmd.add_option("--g", p.g, "Transverse field")->capture_default_str();
        cmd.add_option("--h", p.h, "Longitudinal field")->capture_default_str();
        cmd.add_option("--beta", p.beta, "Inverse temperature")->required();
    }

    json params_json(const IsingParams &p) { return json{{"L", p.L}, {"J", p.J}, {"g", p.g}, {"h", p.h}, {"beta", p.beta}}; }

    // ---------------------------------------------------------------------
    // build-thermal

    struct BuildFlags {
        IsingParams   params;
        Index         bond_dim = 20;
        double        dtau     = 0.01;
        std::uint64_t seed     = 0;
        std::string   form     = "half";
        std::string   out;
    };

    int cmd_build_thermal(const BuildFlags &f, std::ostream &out) {
        const IsingParams p = checked_params(f.params);
        ThermalOptions    opts;
        opts.dbond = cap_or_unbounded(f.bond_dim);
        opts.dtau  = f.dtau;
        try {
            opts.validate();
        } catch(const DomainError &e) {
            throw UsageError(e.what());
        }
        auto state = thermal_half_state(p, opts);
        for(const auto &w : state.warnings) spdlog::warn("{}", w);
        Mpo result = f.form == "full" ? thermal_state_full(state.mpo) : std::move(state.mpo);

        json meta = {{"params", params_json(p)},
                     {"form", f.form},
                     {"bond_dim", cap_to_json(opts.dbond)},
                     {"dtau", opts.dtau},
                     {"seed", f.seed},
                     {"steps", state.steps},
                     {"tau", state.tau},
                     {"layer_errors", state.layer_errors},
                     {"warnings", state.warnings},
                     {"max_bond", result.max_bond()},
                     {"wall_ms", state.wall_ms}};
        write_mpo(f.out, result, meta);
        out << "wrote " << f.out << " (L=" << result.length() << ", max bond " << result.max_bond() << ")\n";
        return exit_ok;
    }

    // ---------------------------------------------------------------------
    // estimate

    struct EstimateFlags {
        std::string           input;
        std::string           function = "entropy";
        Index                 kmax     = 50;
        Index                 dmax     = 100;
        double                eps      = 1e-10;
        Index                 window   = 3;
        std::optional<double> spectrum_floor;
        std::optional<double> spectrum_ceiling;
        std::uint64_t         seed      = 0x5eed;
        bool                  residuals = false;
        std::string           out;
        std::string           iterations_csv;
    };

    std::vector<double> parse_coefficients(const std::string &text) {
        std::vector<double> c;
        std::stringstream   ss(text);
        std::string         item;
        while(std::getline(ss, item, ',')) {
            try {
                std::size_t used = 0;
                c.push_back(std::stod(item, &used));
                if(used != item.size()) throw std::invalid_argument(item);
            } catch(const std::exception &) {
                throw UsageError("bad polynomial coefficient '" + item + "'");
            }
        }
        if(c.empty()) throw UsageError("poly: needs at least one coefficient");
        return c;
    }

    json record_json(const IterationRecord &r) {
        return json{{"k", r.k},
                    {"alpha", r.alpha},
                    {"beta", r.beta},
                    {"ritz_min", r.ritz_min},
                    {"ritz_max", r.ritz_max},
                    {"estimate", r.estimate},
                    {"wall_ms", r.wall_ms},
                    {"max_bond", r.max_bond},
                    {"ritz", r.ritz},
                    {"weights", r.weights}};
    }

    std::string format_double(double x) {
        std::ostringstream s;
        s << std::setprecision(17) << x;
        return s.str();
    }

    std::string iterations_csv(const QuadratureRun &run) {
        std::ostringstream s;
        s << "k,alpha,beta,ritz_min,ritz_max,estimate,wall_ms\n";
        for(const auto &r : run.records)
            s << r.k << ',' << format_double(r.alpha) << ',' << format_double(r.beta) << ',' << format_double(r.ritz_min) << ','
              << format_double(r.ritz_max) << ',' << format_double(r.estimate) << ',' << format_double(r.wall_ms) << '\n';
        return s.str();
    }

    int cmd_estimate(const EstimateFlags &f, std::ostream &out) {
        if(f.kmax < 1) throw UsageError("--kmax must be at least 1");
        if(!(f.eps > 0.0)) throw UsageError("--eps must be positive");
        if(f.window < 2) throw UsageError("--window must be at least 2");

        std::optional<SpectralFunction> fn;
        const bool                      entropy = f.function == "entropy";
        const bool                      trace   = f.function == "trace";
        if(f.function.rfind("poly:", 0) == 0)
            fn = SpectralFunction::polynomial(parse_coefficients(f.function.substr(5)));
        else if(!entropy && !trace)
            throw UsageError("unknown function '" + f.function + "' (entropy, trace or poly:c0,c1,...)");

        const auto doc = read_mpo(f.input);

        LanczosOptions o;
        o.kmax                   = trace ? 1 : f.kmax;
        o.dmax                   = cap_or_unbounded(f.dmax);
        o.stop.eps_conv          = f.eps;
        o.stop.window            = f.window;
        o.stop.spectrum_floor    = f.spectrum_floor;
        o.stop.spectrum_ceiling  = f.spectrum_ceiling;
        o.sweep.seed             = f.seed;
        o.sweep.compute_residual = f.residuals;
        o.on_iteration           = [](const IterationRecord &r, const Mpo &) {
            spdlog::info("k={} estimate={:.15g} ritz=[{:.6g}, {:.6g}] bond={} {:.0f} ms", r.k, r.estimate, r.ritz_min, r.ritz_max, r.max_bond,
                         r.wall_ms);
        };

        json result;
        QuadratureRun run;
        try {
            if(entropy) {
                auto e = entropy_from_half_state(doc.mpo, o);
                run    = std::move(e.run);
                result["entropy"] = {{"log_z2", e.log_z2}};
            } else {
                run = global_lanczos(doc.mpo, trace ? SpectralFunction::identity() : *fn, o);
            }
        } catch(const HermiticityError &e) {
            throw HermiticityError(std::string("hermiticity check failed: ") + e.what());
        }

        result["function"]    = entropy ? std::string("entropy") : trace ? std::string("trace") : fn->name();
        result["estimate"]    = run.estimate;
        result["stop_reason"] = std::string(to_string(run.stop_reason));
        result["iterations"]  = run.records.size();
        result["log_beta1"]   = run.log_beta1;
        result["wall_ms"]     = run.wall_ms;
        result["input"]       = f.input;
        result["settings"]    = {{"kmax", o.kmax},
                                 {"dmax", cap_to_json(o.dmax)},
                                 {"eps", f.eps},
                                 {"window", f.window},
                                 {"spectrum_floor", f.spectrum_floor ? json(*f.spectrum_floor) : json(nullptr)},
                                 {"spectrum_ceiling", f.spectrum_ceiling ? json(*f.spectrum_ceiling) : json(nullptr)},
                                 {"seed", f.seed}};
        json records = json::array();
        for(const auto &r : run.records) records.push_back(record_json(r));
        result["records"] = std::move(records);

        if(!f.iterations_csv.empty()) write_text(f.iterations_csv, iterations_csv(run));
        if(f.out.empty())
            out << result.dump(2) << '\n';
        else {
            write_text(f.out, result.dump(2) + "\n");
            out << std::setprecision(15) << result["function"].get<std::string>() << " = " << run.estimate << " ("
                << result["stop_reason"].get<std::string>() << " after " << run.records.size() << " iterations)\n";
        }
        return exit_ok;
    }

    // ---------------------------------------------------------------------
    // exact

    struct ExactFlags {
        IsingParams params;
        std::string method = "auto";
        std::string out;
    };

    struct OracleValue {
        std::string method;
        double      entropy = 0.0;
    };

    OracleValue oracle_entropy(const IsingParams &p, const std::string &method) {
        std::string m = method;
        if(m == "auto") m = p.L <= 12 ? "dense" : "free-fermion";
        if(m == "free-fermion" && p.h != 0.0) throw UsageError("the free-fermion oracle requires --h 0");
        if(m == "dense" && p.L > dense_oracle_max_sites)
            throw UsageError("the dense oracle is limited to L <= " + std::to_string(dense_oracle_max_sites));
        if(m == "dense") return {m, exact_entropy_dense(p)};
        if(m == "free-fermion") return {m, exact_entropy_free_fermion(p)};
        throw UsageError("unknown method '" + method + "' (dense, free-fermion or auto)");
    }

    int cmd_exact(const ExactFlags &f, std::ostream &out) {
        const IsingParams p   = checked_params(f.params);
        const auto        t0  = Clock::now();
        const auto        val = oracle_entropy(p, f.method);
        const json        doc = {{"method", val.method},
                                 {"entropy", val.entropy},
                                 {"params", params_json(p)},
                                 {"wall_ms", std::chrono::duration<double, std::milli>(Clock::now() - t0).count()}};
        if(!f.out.empty()) write_text(f.out, doc.dump(2) + "\n");
        out << doc.dump(2) << '\n';
        return exit_ok;
    }

    // ---------------------------------------------------------------------
    // sweep

    struct SweepFlags {
        std::string manifest;
        std::string out;
        unsigned    jobs = 1;
    };

    struct Cell {
        IsingParams params;
        Index       dmax = 100;
        Index       kmax = 50;
    };

    struct CellResult {
        double      entropy  = std::nan("");
        double      exact    = std::nan("");
        double      rel      = std::nan("");
        std::string oracle;
        std::string stop_reason;
        Index       iterations = 0;
        double      wall_ms    = 0.0;
        std::string error;
    };

    template<typename T>
    std::vector<T> list_field(const json &m, const char *key, std::optional<T> fallback = std::nullopt) {
        if(!m.contains(key)) {
            if(fallback) return {*fallback};
            throw UsageError(std::string("manifest needs a '") + key + "' list");
        }
        const json &v = m[key];
        std::vector<T> out;
        try {
            if(v.is_array())
                for(const auto &x : v) out.push_back(x.get<T>());
            else
                out.push_back(v.get<T>());
        } catch(const json::exception &) {
            throw UsageError(std::string("manifest field '") + key + "' has the wrong type");
        }
        if(out.empty()) throw UsageError(std::string("manifest list '") + key + "' is empty");
        return out;
    }

    template<typename T>
    T scalar_field(const json &m, const char *key, T fallback) {
        if(!m.contains(key)) return fallback;
        try {
            return m[key].get<T>();
        } catch(const json::exception &) {
            throw UsageError(std::string("manifest field '") + key + "' has the wrong type");
        }
    }

    CellResult run_cell(const Cell &c, const ThermalOptions &topts, const StoppingConfig &stop) {
        CellResult r;
        const auto t0 = Clock::now();
        try {
            c.params.validate();
            const auto oracle = oracle_entropy(c.params, "auto");
            r.oracle          = oracle.method;
            r.exact           = oracle.entropy;
            const auto half   = thermal_half_state(c.params, topts);
            LanczosOptions o;
            o.kmax    = c.kmax;
            o.dmax    = c.dmax;
            o.stop    = stop;
            auto res  = entropy_from_half_state(half.mpo, o);
            r.entropy = res.entropy;
            r.stop_reason = std::string(to_string(res.run.stop_reason));
            r.iterations  = res.run.records.size();
            r.rel         = std::abs(r.entropy - r.exact) / std::abs(r.exact);
        } catch(const std::exception &e) {
            r.error = e.what();
        }
        r.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
        return r;
    }

    std::string csv_escape(const std::string &s) {
        if(s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string out = "\"";
        for(char ch : s) {
            if(ch == '"') out += '"';
            out += ch == '\n' ? ' ' : ch;
        }
        return out + "\"";
    }

    int cmd_sweep(const SweepFlags &f, std::ostream &out) {
        if(f.jobs < 1) throw UsageError("--jobs must be at least 1");
        json m;
        try {
            m = read_json(f.manifest);
        } catch(const FormatError &e) {
            throw UsageError(e.what());
        }
        if(!m.is_object() || m.empty()) throw UsageError("manifest is empty");

        const auto Ls    = list_field<Index>(m, "L");
        const auto betas = list_field<double>(m, "beta");
        const auto dmaxs = list_field<Index>(m, "dmax");
        const auto kmaxs = list_field<Index>(m, "kmax", Index{50});

        ThermalOptions topts;
        topts.dbond = cap_or_unbounded(scalar_field<Index>(m, "bond_dim", 20));
        topts.dtau  = scalar_field<double>(m, "dtau", 0.01);
        StoppingConfig stop;
        stop.eps_conv = scalar_field<double>(m, "eps", 1e-10);
        stop.window   = scalar_field<Index>(m, "window", 3);
        try {
            topts.validate();
            stop.validate();
        } catch(const DomainError &e) {
            throw UsageError(e.what());
        }

        std::vector<Cell> cells;
        for(Index L : Ls)
            for(double beta : betas)
                for(Index dmax : dmaxs)
                    for(Index kmax : kmaxs) {
                        Cell c;
                        c.params = {.L = L,
                                    .J = scalar_field<double>(m, "J", 1.0),
                                    .g = scalar_field<double>(m, "g", 1.0),
                                    .h = scalar_field<double>(m, "h", 0.0),
                                    .beta = beta};
                        c.dmax = cap_or_unbounded(dmax);
                        c.kmax = kmax;
                        cells.push_back(c);
                    }

        std::vector<CellResult> results(cells.size());
        std::atomic<Index>      next{0};
        auto                    worker = [&] {
            for(Index i = next++; i < cells.size(); i = next++) {
                spdlog::info("cell {}/{}: L={} beta={} dmax={} kmax={}", i + 1, cells.size(), cells[i].params.L, cells[i].params.beta,
                             cells[i].dmax, cells[i].kmax);
                results[i] = run_cell(cells[i], topts, stop);
            }
        };
        const unsigned           n = std::min<unsigned>(f.jobs, static_cast<unsigned>(cells.size()));
        std::vector<std::thread> pool;
        for(unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
        worker();
        for(auto &t : pool) t.join();

        std::ostringstream csv;
        csv << "L,beta,dmax,kmax,entropy,exact,oracle,rel_error,stop_reason,iterations,wall_ms,error\n";
        Index ok = 0;
        for(Index i = 0; i < cells.size(); ++i) {
            const auto &c = cells[i];
            const auto &r = results[i];
            if(r.error.empty()) ++ok;
            csv << c.params.L << ',' << format_double(c.params.beta) << ',' << (c.dmax == unbounded ? std::string("inf") : std::to_string(c.dmax))
                << ',' << c.kmax << ',' << format_double(r.entropy) << ',' << format_double(r.exact) << ',' << r.oracle << ','
                << format_double(r.rel) << ',' << r.stop_reason << ',' << r.iterations << ',' << format_double(r.wall_ms) << ','
                << csv_escape(r.error) << '\n';
        }

        // Error should not grow with dmax at fixed L, beta, kmax.
        for(Index i = 0; i < cells.size(); ++i)
            for(Index j = 0; j < cells.size(); ++j) {
                const auto &a = cells[i];
                const auto &b = cells[j];
                if(a.params.L == b.params.L && a.params.beta == b.params.beta && a.kmax == b.kmax && a.dmax < b.dmax &&
                   results[j].rel > results[i].rel)
                    spdlog::warn("L={} beta={}: relative error {:.3e} at dmax={} exceeds {:.3e} at dmax={}", a.params.L, a.params.beta,
                                 results[j].rel, b.dmax, results[i].rel, a.dmax);
            }

        if(f.out.empty())
            out << csv.str();
        else {
            write_text(f.out, csv.str());
            out << "wrote " << f.out << " (" << ok << " of " << cells.size() << " cells succeeded)\n";
        }
        return ok > 0 ? exit_ok : exit_failure;
    }
} // namespace

void configure_logging() {
    static std::once_flag once;
    std::call_once(once, [] {
        auto logger = spdlog::stderr_color_mt("mpotrace");
        spdlog::set_default_logger(logger);
        spdlog::set_level(spdlog::level::warn);
        if(const char *env = std::getenv("MPOTRACE_LOG")) spdlog::set_level(spdlog::level::from_str(env));
    });
}

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"Trace functionals of Hermitian matrix product operators by global Lanczos and Gauss quadrature", "mpotrace"};
    app.require_subcommand(1);
    // -h is the longitudinal field.
    app.set_help_flag("--help", "Print this help message and exit");

    BuildFlags build;
    auto      *c_build = app.add_subcommand("build-thermal", "Write the thermal half state exp(-beta H / 2) of the Ising chain");
    add_model_flags(*c_build, build.params);
    c_build->add_option("--bond-dim", build.bond_dim, "Bond cap during the evolution, 0 for none")->capture_default_str();
    c_build->add_option("--dtau", build.dtau, "Trotter step")->capture_default_str();
    c_build->add_option("--seed", build.seed, "Recorded in the metadata; the build is deterministic")->capture_default_str();
    c_build->add_option("--form", build.form, "half: exp(-beta H / 2); full: normalized exp(-beta H)")
        ->check(CLI::IsMember({"half", "full"}))
        ->capture_default_str();
    c_build->add_option("--out", build.out, "Output MPO file")->required();

    EstimateFlags est;
    auto         *c_est = app.add_subcommand("estimate", "Run the Lanczos quadrature on an MPO file");
    c_est->add_option("--input", est.input, "MPO file")->required()->check(CLI::ExistingFile);
    c_est->add_option("--function", est.function, "entropy, trace or poly:c0,c1,...")->capture_default_str();
    c_est->add_option("--kmax", est.kmax, "Maximum Lanczos steps")->capture_default_str();
    c_est->add_option("--dmax", est.dmax, "Bond cap, 0 for none")->capture_default_str();
    c_est->add_option("--eps", est.eps, "Convergence tolerance on successive estimates")->capture_default_str();
    c_est->add_option("--window", est.window, "Window of the sigma outlier test")->capture_default_str();
    c_est->add_option("--spectrum-floor", est.spectrum_floor, "Known lower bound of the spectrum");
    c_est->add_option("--spectrum-ceiling", est.spectrum_ceiling, "Known upper bound of the spectrum");
    c_est->add_option("--seed", est.seed, "Seed for random initial guesses")->capture_default_str();
    c_est->add_flag("--residuals", est.residuals, "Compute optimization residuals (slow)");
    c_est->add_option("--out", est.out, "Result JSON (stdout when omitted)");
    c_est->add_option("--iterations-csv", est.iterations_csv, "Per-iteration CSV log");

    ExactFlags exact;
    auto      *c_exact = app.add_subcommand("exact", "Reference thermal entropy of the Ising chain");
    add_model_flags(*c_exact, exact.params);
    c_exact->add_option("--method", exact.method, "dense, free-fermion or auto")
        ->check(CLI::IsMember({"dense", "free-fermion", "auto"}))
        ->capture_default_str();
    c_exact->add_option("--out", exact.out, "Also write the JSON here");

    SweepFlags sweep;
    auto      *c_sweep = app.add_subcommand("sweep", "Run an experiment grid from a JSON manifest");
    c_sweep->add_option("--manifest", sweep.manifest, "Manifest JSON")->required()->check(CLI::ExistingFile);
    c_sweep->add_option("--out", sweep.out, "Output CSV (stdout when omitted)");
    c_sweep->add_option("--jobs", sweep.jobs, "Concurrent cells")->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch(const CLI::CallForHelp &) {
        out << app.help();
        return exit_ok;
    } catch(const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch(const CLI::ParseError &e) {
        err << "usage error: " << e.what() << '\n';
        return exit_usage;
    }

    try {
        if(c_build->parsed()) return cmd_build_thermal(build, out);
        if(c_est->parsed()) return cmd_estimate(est, out);
        if(c_exact->parsed()) return cmd_exact(exact, out);
        if(c_sweep->parsed()) return cmd_sweep(sweep, out);
    } catch(const UsageError &e) {
        err << "usage error: " << e.what() << '\n';
        return exit_usage;
    } catch(const std::exception &e) {
        err << "error: " << e.what() << '\n';
        return exit_failure;
    }
    return exit_usage;
}

} // namespace mpotrace::cli
