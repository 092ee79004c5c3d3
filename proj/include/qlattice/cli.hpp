#pragma once

#include <cstdio>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qlattice/errors.hpp"
#include "qlattice/expsums.hpp"
#include "qlattice/forms.hpp"
#include "qlattice/hkernel.hpp"
#include "qlattice/lattice_enum.hpp"
#include "qlattice/localdensities.hpp"
#include "qlattice/parallel.hpp"
#include "qlattice/pipeline.hpp"
#include "qlattice/quadric_integrals.hpp"
#include "qlattice/weight.hpp"

namespace qlattice::cli {

inline constexpr const char* kToolVersion = "0.1.0";

enum class Command { none, count, circle, verify, sigma_series, sigma_infinity, expsum, h_eval, delta_check, local_count };

struct RunConfig {
    Command command = Command::none;
    std::string command_name;
    std::string form_path;
    std::string weight_name = "gaussian";
    std::string m = "0", L = "1", t = "0";
    std::string c;  // csv
    std::string L_grid;
    std::string method = "auto";
    std::string route = "auto";
    std::string strategy = "auto";
    double x = 0.0, y = 0.0, Q = 0.0;
    u64 q = 1, p = 2, pmax = 0, qmax = 0;
    int k = 1, cmax = -1, nmax = 0;
    double tol = 1e-6;
    double budget = 3e8;
    std::optional<u64> seed;
    long long samples = 0;
    bool star = false;
    bool strict = false;  // exit 4 when a series or integral misses its tolerance
    std::string format;  // json | csv; default depends on the command
    int workers = 0;
};

// Exit codes.
enum : int { kOk = 0, kValidation = 2, kBudget = 3, kNonConvergence = 4 };

namespace detail {

using nlohmann::ordered_json;

inline std::vector<i64> parse_csv_ints(const std::string& s) {
    std::vector<i64> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(static_cast<i64>(parse_bigint(item)));
    }
    return out;
}

inline std::vector<Rational> parse_csv_rationals(const std::string& s) {
    std::vector<Rational> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(parse_rational(item));
    return out;
}

inline std::string rat_text(const Rational& r) {
    std::ostringstream os;
    os << r;
    return os.str();
}

// Shortest decimal text that round-trips; keeps CSV output deterministic.
inline std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

// JSON has no inf/nan; those are written as strings.
inline ordered_json jnum(double v) {
    if (std::isfinite(v)) return v;
    return num(v);
}

inline ordered_json config_echo(const RunConfig& c) {
    ordered_json j;
    j["command"] = c.command_name;
    if (!c.form_path.empty()) j["form"] = c.form_path;
    switch (c.command) {
        case Command::count:
            j["m"] = c.m, j["L"] = c.L, j["weight"] = c.weight_name, j["tol"] = c.tol, j["strategy"] = c.strategy;
            break;
        case Command::circle:
            j["m"] = c.m, j["L"] = c.L, j["weight"] = c.weight_name, j["tol"] = c.tol;
            j["qmax"] = c.qmax, j["cmax"] = c.cmax, j["budget"] = c.budget;
            break;
        case Command::verify:
            j["m"] = c.m, j["L_grid"] = c.L_grid, j["weight"] = c.weight_name, j["tol"] = c.tol;
            j["qmax"] = c.qmax, j["cmax"] = c.cmax;
            break;
        case Command::sigma_series:
            j["t"] = c.t, j["tol"] = c.tol, j["pmax"] = c.pmax, j["star"] = c.star, j["c"] = c.c;
            break;
        case Command::sigma_infinity:
            j["t"] = c.t, j["weight"] = c.weight_name, j["method"] = c.method, j["tol"] = c.tol;
            j["samples"] = c.samples;
            break;
        case Command::expsum: j["q"] = c.q, j["c"] = c.c, j["t"] = c.t, j["route"] = c.route; break;
        case Command::h_eval: j["x"] = c.x, j["y"] = c.y; break;
        case Command::delta_check: j["Q"] = c.Q, j["nmax"] = c.nmax; break;
        case Command::local_count: j["p"] = c.p, j["k"] = c.k, j["t"] = c.t; break;
        case Command::none: break;
    }
    return j;
}

inline ordered_json metadata(const RunConfig& c, const std::string& form_hash) {
    ordered_json m;
    m["tool_version"] = kToolVersion;
    m["form_hash"] = form_hash.empty() ? ordered_json(nullptr) : ordered_json(form_hash);
    m["seed"] = c.seed ? ordered_json(*c.seed) : ordered_json(nullptr);
    m["workers"] = c.workers;
    return m;
}

inline ordered_json envelope(const RunConfig& c, const std::string& hash) {
    ordered_json j;
    j["metadata"] = metadata(c, hash);
    j["config"] = config_echo(c);
    return j;
}

inline void emit_json(std::ostream& out, const ordered_json& j) { out << j.dump(2) << "\n"; }

// CSV tables open with comment lines carrying the metadata and config echo.
inline void csv_preamble(std::ostream& out, const RunConfig& c, const std::string& hash) {
    out << "# metadata: " << metadata(c, hash).dump() << "\n";
    out << "# config: " << config_echo(c).dump() << "\n";
}

inline ordered_json series_json(const SeriesResult& s) {
    ordered_json j;
    j["value"] = jnum(s.value);
    j["tail_bound"] = jnum(s.tail_bound);
    j["converged"] = s.converged;
    j["divergent_risk"] = s.divergent_risk;
    j["pmax"] = s.pmax;
    ordered_json fs = ordered_json::array();
    for (const auto& f : s.factors) {
        ordered_json e;
        e["p"] = f.p;
        e["factor"] = jnum(f.value);
        e["lmax"] = f.lmax;
        e["converged"] = f.converged;
        fs.push_back(e);
    }
    j["factors"] = fs;
    return j;
}

inline ordered_json integral_json(const IntegralResult& r) {
    ordered_json j;
    j["value"] = jnum(r.value);
    j["err_estimate"] = jnum(r.err_estimate);
    j["method"] = method_name(r.method);
    j["samples_or_nodes"] = r.samples_or_nodes;
    j["seed"] = r.seed ? ordered_json(*r.seed) : ordered_json(nullptr);
    j["converged"] = r.converged;
    return j;
}

inline std::vector<i64> c_vector(const RunConfig& c, int d) {
    if (c.c.empty()) return std::vector<i64>(d, 0);
    auto v = parse_csv_ints(c.c);
    if (static_cast<int>(v.size()) != d) throw ValidationError("--c: expected " + std::to_string(d) + " entries");
    return v;
}

inline i64 int_t(const std::string& s) {
    Rational r = parse_rational(s);
    if (boost::multiprecision::denominator(r) != 1) throw ValidationError("--t must be an integer here");
    return static_cast<i64>(boost::multiprecision::numerator(r));
}

inline EnumStrategy parse_strategy(const std::string& s) {
    if (s == "auto") return EnumStrategy::automatic;
    if (s == "hyperbolic") return EnumStrategy::hyperbolic;
    if (s == "last_coordinate") return EnumStrategy::last_coordinate;
    if (s == "odometer") return EnumStrategy::odometer;
    throw ValidationError("unknown strategy '" + s + "'");
}

}  // namespace detail

// Runs one operation and writes its records to `out`.
inline int dispatch(RunConfig c, std::ostream& out) {
    using detail::ordered_json;
    using detail::jnum;
    if (c.workers <= 0) c.workers = default_workers();
    if (!(c.tol > 0)) throw ValidationError("--tol must be positive");
    std::optional<QuadraticForm> form;
    std::string hash;
    auto need_form = [&]() -> const QuadraticForm& {
        if (c.form_path.empty()) throw ValidationError("--form is required");
        if (!form) {
            form = load_form(c.form_path);
            hash = form->hash();
        }
        return *form;
    };

    switch (c.command) {
        case Command::count: {
            const auto& f = need_form();
            auto w = make_weight(c.weight_name, f.dim());
            auto r = N_L_brute(w, f, parse_rational(c.m), parse_rational(c.L), c.tol, c.workers,
                               detail::parse_strategy(c.strategy));
            auto j = detail::envelope(c, hash);
            j["value"] = jnum(r.value);
            j["truncation_bound"] = jnum(r.truncation_bound);
            j["points"] = r.points;
            j["radius"] = jnum(r.radius);
            j["strategy"] = strategy_name(r.strategy);
            j["partitions"] = r.partitions;
            detail::emit_json(out, j);
            return kOk;
        }
        case Command::circle: {
            const auto& f = need_form();
            auto w = make_weight(c.weight_name, f.dim());
            PipelineParams P;
            P.q_max = c.qmax;
            P.c_max = c.cmax >= 0 ? c.cmax : (f.dim() == 4 ? 1 : 0);
            P.tol = c.tol;
            P.node_budget = c.budget;
            P.workers = c.workers;
            auto rep = circle_rhs(w, f, parse_rational(c.m), parse_rational(c.L), P);
            auto j = detail::envelope(c, hash);
            j["N_circle"] = jnum(rep.N_circle);
            j["leading"] = jnum(rep.leading);
            j["c_L"] = jnum(rep.c_L);
            j["complete"] = rep.complete;
            j["skipped_terms"] = rep.skipped;
            j["q_tail_estimate"] = jnum(rep.q_tail_estimate);
            j["c_shell_magnitude"] = jnum(rep.c_shell_magnitude);
            j["q_max"] = rep.params.q_max;
            j["c_max"] = rep.params.c_max;
            auto J = J_decomposition(rep, 0.5);
            j["J"] = {{"gamma1", 0.5}, {"J0", jnum(J.J0)}, {"J_less", jnum(J.J_less)}, {"J_greater", jnum(J.J_greater)}};
            ordered_json rows = ordered_json::array();
            for (const auto& r : rep.rows) {
                ordered_json e;
                e["c"] = r.c;
                e["q"] = r.q;
                e["S_re"] = jnum(r.S.real());
                e["S_im"] = jnum(r.S.imag());
                e["I_re"] = jnum(r.I.real());
                e["I_im"] = jnum(r.I.imag());
                e["I_err"] = jnum(r.I_err);
                e["contribution"] = jnum(r.contribution);
                e["status"] = r.status;
                rows.push_back(e);
            }
            j["terms"] = rows;
            detail::emit_json(out, j);
            return c.strict && !rep.complete ? kNonConvergence : kOk;
        }
        case Command::verify: {
            const auto& f = need_form();
            auto w = make_weight(c.weight_name, f.dim());
            auto Ls = detail::parse_csv_rationals(c.L_grid);
            const Rational m = parse_rational(c.m);
            auto tab = asymptotic_table(w, f, m, Ls, c.tol, c.workers);
            const bool circle = c.qmax > 0 || c.cmax >= 0;
            std::vector<double> nc;
            if (circle)
                for (const auto& L : Ls) {
                    PipelineParams P;
                    P.q_max = c.qmax;
                    P.c_max = std::max(0, c.cmax);
                    P.tol = std::max(c.tol, 1e-4);
                    P.workers = c.workers;
                    nc.push_back(circle_rhs(w, f, m, L, P).N_circle);
                }
            detail::csv_preamble(out, c, hash);
            out << "L,N_brute,truncation_bound,leading,residual,residual_over_L^(d-2),residual_over_L^(d/2+0.25),"
                   "residual_over_L^(d/2+0.5)";
            if (tab.d == 4) out << ",N_over_L2,logL";
            if (circle) out << ",N_circle";
            out << "\n";
            for (std::size_t i = 0; i < tab.rows.size(); ++i) {
                const auto& r = tab.rows[i];
                using detail::num;
                out << num(r.L) << ',' << num(r.N_brute) << ',' << num(r.truncation_bound) << ',' << num(r.leading)
                    << ',' << num(r.residual) << ',' << num(r.residual_norm) << ',' << num(r.residual_q25) << ','
                    << num(r.residual_q50);
                if (tab.d == 4) out << ',' << num(r.N_over_L2) << ',' << num(r.logL);
                if (circle) out << ',' << num(nc[i]);
                out << "\n";
            }
            ordered_json s;
            s["sigma_inf"] = jnum(tab.sigma_inf);
            s["sigma_inf_err"] = jnum(tab.sigma_inf_err);
            s[tab.d == 4 ? "sigma_star" : "sigma"] = jnum(tab.arithmetic);
            s["arithmetic_tail_bound"] = jnum(tab.arithmetic_tail);
            if (tab.fit) {
                s["fit"] = {{"slope", jnum(tab.fit->slope)},
                            {"intercept", jnum(tab.fit->intercept)},
                            {"r2", jnum(tab.fit->r2)},
                            {"predicted_slope", jnum(tab.sigma_inf * tab.arithmetic)}};
            }
            out << "# summary: " << s.dump() << "\n";
            return kOk;
        }
        case Command::sigma_series: {
            const auto& f = need_form();
            auto cv = detail::c_vector(c, f.dim());
            SeriesResult r;
            if (c.star) {
                r = sigma_star(f, cv, c.tol, c.pmax, c.workers);
            } else {
                if (!c.c.empty() && !qlattice::detail::all_zero(cv)) throw ValidationError("--c needs --star");
                r = sigma(f, detail::int_t(c.t), c.tol, c.pmax, c.workers);
            }
            auto j = detail::envelope(c, hash);
            j["result"] = detail::series_json(r);
            detail::emit_json(out, j);
            return c.strict && !r.converged ? kNonConvergence : kOk;
        }
        case Command::sigma_infinity: {
            const auto& f = need_form();
            auto w = make_weight(c.weight_name, f.dim());
            auto method = parse_method(c.method);
            const double t = static_cast<double>(parse_rational(c.t));
            IntegralResult r;
            if (method == IntegralMethod::thin_shell_mc) {
                if (!c.seed) throw ValidationError("--seed is required for the Monte Carlo method");
                r = sigma_infinity_mc(w, f, t, c.tol, *c.seed, c.samples, c.workers);
            } else {
                r = sigma_infinity(w, f, t, method, c.tol);
            }
            auto j = detail::envelope(c, hash);
            j["result"] = detail::integral_json(r);
            detail::emit_json(out, j);
            return c.strict && !r.converged ? kNonConvergence : kOk;
        }
        case Command::expsum: {
            const auto& f = need_form();
            auto cv = detail::c_vector(c, f.dim());
            const i64 t = detail::int_t(c.t);
            ExpSumValue v;
            if (c.route == "auto")
                v = S_q(c.q, cv, f, t, c.workers);
            else if (c.route == "naive")
                v = S_q_naive(c.q, cv, f, t, c.workers);
            else if (c.route == "direct")
                v = S_q_direct(c.q, cv, f, t, c.workers);
            else if (c.route == "block") {
                auto fac = factorize(c.q);
                if (fac.size() != 1) throw ValidationError("--route block needs a prime power q");
                v = S_prime_power_block(fac[0].p, fac[0].k, cv, f, t);
            } else
                throw ValidationError("unknown route '" + c.route + "'");
            auto j = detail::envelope(c, hash);
            j["re"] = jnum(v.value.real());
            j["im"] = jnum(v.value.imag());
            // rounding: about eps per unit-modulus term
            const double terms = std::pow(static_cast<double>(c.q), f.dim()) * static_cast<double>(euler_phi(c.q));
            j["err_estimate"] = jnum(2.220446049250313e-16 * std::sqrt(terms) * std::max(1.0, std::abs(v.value)));
            j["route"] = route_name(v.route);
            detail::emit_json(out, j);
            return kOk;
        }
        case Command::h_eval: {
            const double h1 = eval_h1(c.x), h2 = eval_h2(c.x, c.y);
            auto j = detail::envelope(c, hash);
            j["h"] = jnum(h1 - h2);
            j["h1"] = jnum(h1);
            j["h2"] = jnum(h2);
            const double nterms = 2.0 + 1.0 / c.x + std::abs(c.y) / c.x;
            j["err_estimate"] = jnum(4 * 2.220446049250313e-16 * nterms * (std::abs(h1) + std::abs(h2)));
            detail::emit_json(out, j);
            return kOk;
        }
        case Command::delta_check: {
            if (c.nmax < 0) throw ValidationError("--nmax must be >= 0");
            if (!(c.Q >= 2.0)) throw ValidationError("--Q must be >= 2");
            const bool csv = c.format != "json";
            ordered_json recs = ordered_json::array();
            if (csv) {
                detail::csv_preamble(out, c, hash);
                out << "n,value,expected,rounding_floor\n";
            }
            for (int n = -c.nmax; n <= c.nmax; ++n) {
                const double v = delta_rhs(n, c.Q);
                const double fl = delta_rounding_floor(n, c.Q);
                if (csv) {
                    out << n << ',' << detail::num(v) << ',' << (n == 0 ? 1 : 0) << ',' << detail::num(fl) << "\n";
                } else {
                    recs.push_back({{"n", n}, {"value", jnum(v)}, {"expected", n == 0 ? 1 : 0},
                                    {"rounding_floor", jnum(fl)}});
                }
            }
            if (!csv) {
                auto j = detail::envelope(c, hash);
                j["records"] = recs;
                detail::emit_json(out, j);
            }
            return kOk;
        }
        case Command::local_count: {
            const auto& f = need_form();
            const i64 t = detail::int_t(c.t);
            BigInt n = count_Npk(c.p, c.k, f, t);
            auto j = detail::envelope(c, hash);
            j["count"] = n.str();
            j["err_estimate"] = 0;  // exact
            j["sigma_p_estimate"] = jnum(static_cast<double>(n) /
                                         std::pow(static_cast<double>(c.p), (f.dim() - 1) * c.k));
            detail::emit_json(out, j);
            return kOk;
        }
        case Command::none: break;
    }
    throw ValidationError("no subcommand given");
}

// Parses argv, dispatches, and maps errors to exit codes.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig c;
    CLI::App app{"Lattice points on quadrics: counts, circle-method sums, local densities"};
    app.require_subcommand(1);
    std::optional<u64> seed_opt;
    auto common = [&](CLI::App* s, Command cmd, bool form) {
        s->callback([&c, cmd, s] {
            c.command = cmd;
            c.command_name = s->get_name();
        });
        if (form) s->add_option("--form", c.form_path, "form file (JSON: dim, matrix)")->required();
        s->add_option("--workers", c.workers, "worker threads (default: QLATTICE_WORKERS or all cores)");
        s->add_option("--format", c.format, "json or csv");
        s->add_flag("--strict", c.strict, "exit with status 4 when a result is not converged");
    };
    auto* count = app.add_subcommand("count", "weighted lattice point count N_L");
    common(count, Command::count, true);
    count->add_option("--m", c.m);
    count->add_option("--L", c.L)->required();
    count->add_option("--weight", c.weight_name);
    count->add_option("--tol", c.tol);
    count->add_option("--strategy", c.strategy, "auto, hyperbolic, last_coordinate or odometer");

    auto* circle = app.add_subcommand("circle", "circle-method right-hand side for one L");
    common(circle, Command::circle, true);
    circle->add_option("--m", c.m);
    circle->add_option("--L", c.L)->required();
    circle->add_option("--weight", c.weight_name);
    circle->add_option("--tol", c.tol);
    circle->add_option("--qmax", c.qmax);
    circle->add_option("--cmax", c.cmax);
    circle->add_option("--budget", c.budget, "node budget per oscillatory term");

    auto* verify = app.add_subcommand("verify", "asymptotic table over a grid of L");
    common(verify, Command::verify, true);
    verify->add_option("--m", c.m);
    verify->add_option("--L-grid", c.L_grid)->required();
    verify->add_option("--weight", c.weight_name);
    verify->add_option("--tol", c.tol);
    verify->add_option("--qmax", c.qmax);
    verify->add_option("--cmax", c.cmax);

    auto* series = app.add_subcommand("sigma-series", "singular series and local densities");
    common(series, Command::sigma_series, true);
    series->add_option("--t", c.t);
    series->add_option("--tol", c.tol);
    series->add_option("--pmax", c.pmax);
    series->add_flag("--star", c.star, "the product of (1 - 1/p) sigma_p^c at t = 0");
    series->add_option("--c", c.c, "comma-separated integer vector");

    auto* sinf = app.add_subcommand("sigma-infinity", "singular integral");
    common(sinf, Command::sigma_infinity, true);
    sinf->add_option("--t", c.t);
    sinf->add_option("--weight", c.weight_name);
    sinf->add_option("--method", c.method, "auto, sphere, fibration or mc");
    sinf->add_option("--tol", c.tol);
    sinf->add_option("--seed", seed_opt);
    sinf->add_option("--samples", c.samples);

    auto* es = app.add_subcommand("expsum", "complete exponential sum S_q(c)");
    common(es, Command::expsum, true);
    es->add_option("--q", c.q)->required();
    es->add_option("--c", c.c);
    es->add_option("--t", c.t);
    es->add_option("--route", c.route, "auto, naive, direct or block");

    auto* he = app.add_subcommand("h-eval", "delta kernel h(x, y)");
    common(he, Command::h_eval, false);
    he->add_option("--x", c.x)->required();
    he->add_option("--y", c.y)->required();

    auto* dc = app.add_subcommand("delta-check", "delta representation for n in [-nmax, nmax]");
    common(dc, Command::delta_check, false);
    dc->add_option("--Q", c.Q)->required();
    dc->add_option("--nmax", c.nmax)->required();

    auto* lc = app.add_subcommand("local-count", "solutions of F(z) = t mod p^k");
    common(lc, Command::local_count, true);
    lc->add_option("--p", c.p)->required();
    lc->add_option("--k", c.k)->required();
    lc->add_option("--t", c.t);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kValidation;
    }
    c.seed = seed_opt;
    try {
        return dispatch(c, out);
    } catch (const ValidationError& e) {
        err << "validation error: " << e.what() << "\n";
        return kValidation;
    } catch (const BudgetExceeded& e) {
        err << e.what() << "\n";
        return kBudget;
    } catch (const NonConvergence& e) {
        err << "no convergence: " << e.what() << " (partial " << e.partial_value << ")\n";
        return kNonConvergence;
    }
}

}  // namespace qlattice::cli
