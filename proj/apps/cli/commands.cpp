#include "commands.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <regex>
#include <sstream>

#include "config.hpp"
#include "threehalves/threehalves.h"

namespace cli {

namespace {

// ------------------------------------------------------------ C API glue

class ApiError : public std::runtime_error {
public:
    ApiError(th_status s, const std::string& msg) : std::runtime_error(msg), status(s) {}
    th_status status;
};

void check(th_status s) {
    if (s != TH_OK) throw ApiError(s, std::string(th_status_name(s)) + ": " + th_last_error());
}

using ModelPtr = std::unique_ptr<th_model, decltype(&th_model_destroy)>;
using QuadPtr = std::unique_ptr<th_quad_config, decltype(&th_quad_config_destroy)>;
using SimPtr = std::unique_ptr<th_sim_config, decltype(&th_sim_config_destroy)>;

const char* const kModelKeys[] = {"kappa", "theta", "epsilon", "rho", "r", "q", "s0", "v0",
                                  "jump_lambda", "jump_mu", "jump_sigma"};

bool is_model_key(const std::string& k) {
    for (const char* m : kModelKeys)
        if (k == m) return true;
    return k == "theta_breaks" || k == "theta_values";
}

ConfigError unknown_key(const Entry& e, const std::string& section) {
    return ConfigError("unknown key '" + e.key + "' in [" + section + "]", e.line, e.key_column);
}

// A C API refusal of a config value becomes a config error at that value.
void set_or_config_error(th_status st, const Entry& e, const std::string& section) {
    if (st == TH_OK) return;
    if (st == TH_ERR_UNKNOWN_KEY) throw unknown_key(e, section);
    if (st == TH_ERR_INVALID_ARGUMENT) throw ConfigError(th_last_error(), e.line, e.value_column);
    check(st);
}

ModelPtr build_model(const ConfigFile& cfg) {
    th_model* raw = nullptr;
    check(th_model_create(&raw));
    ModelPtr m(raw, th_model_destroy);
    const Section* s = cfg.find("model");
    if (!s) return m;
    for (const auto& e : s->entries) {
        if (e.key == "theta_breaks" || e.key == "theta_values") continue;
        set_or_config_error(th_model_set(m.get(), e.key.c_str(), to_double(e)), e, "model");
    }
    const Entry* tb = s->find("theta_breaks");
    const Entry* tv = s->find("theta_values");
    if (tb || tv) {
        const Entry& at = tb ? *tb : *tv;
        if (!tb || !tv) throw ConfigError("theta_breaks and theta_values go together", at.line, at.key_column);
        if (s->find("theta")) throw ConfigError("give theta or a theta curve, not both", at.line, at.key_column);
        const auto b = to_list(*tb);
        const auto v = to_list(*tv);
        if (b.size() != v.size() + 1)
            throw ConfigError("theta_breaks needs one more entry than theta_values", tb->line, tb->value_column);
        set_or_config_error(th_model_set_theta_curve(m.get(), b.data(), v.data(), v.size()), *tb, "model");
    }
    return m;
}

QuadPtr build_quadrature(const ConfigFile& cfg) {
    th_quad_config* raw = nullptr;
    check(th_quad_config_create(&raw));
    QuadPtr q(raw, th_quad_config_destroy);
    if (const Section* s = cfg.find("quadrature")) {
        for (const auto& e : s->entries) {
            double x = 0.0;
            if (e.value == "true") x = 1.0;
            else if (e.value == "false") x = 0.0;
            else x = to_double(e);
            set_or_config_error(th_quad_config_set(q.get(), e.key.c_str(), x), e, "quadrature");
        }
    }
    return q;
}

std::uint64_t to_u64(const Entry& e) {
    std::uint64_t x = 0;
    const char* b = e.value.data();
    const char* end = b + e.value.size();
    const auto r = std::from_chars(b, end, x);
    if (r.ec != std::errc() || r.ptr != end)
        throw ConfigError("'" + e.key + "' needs an unsigned 64-bit integer", e.line, e.value_column);
    return x;
}

struct Simulation {
    SimPtr handle;
    std::uint64_t seed = 0;
};

Simulation build_simulation(const ConfigFile& cfg, std::optional<std::uint64_t> seed_override) {
    th_sim_config* raw = nullptr;
    check(th_sim_config_create(&raw));
    SimPtr s(raw, th_sim_config_destroy);
    double default_seed = 0.0;
    check(th_sim_config_get(s.get(), "seed", &default_seed));
    std::uint64_t seed = static_cast<std::uint64_t>(default_seed);
    if (const Section* sec = cfg.find("simulation")) {
        for (const auto& e : sec->entries) {
            if (e.key == "seed") {
                seed = to_u64(e);
            } else if (e.key == "scheme") {
                if (e.value != "exact" && e.value != "euler")
                    throw ConfigError("scheme must be 'exact' or 'euler'", e.line, e.value_column);
                check(th_sim_config_set(s.get(), "scheme", e.value == "exact" ? 0.0 : 1.0));
            } else if (e.key == "n_paths" || e.key == "steps_per_year") {
                set_or_config_error(th_sim_config_set(s.get(), e.key.c_str(), static_cast<double>(to_integer(e))), e,
                                    "simulation");
            } else {
                throw unknown_key(e, "simulation");
            }
        }
    }
    if (seed_override) seed = *seed_override;
    check(th_sim_config_set_seed(s.get(), seed));
    return {std::move(s), seed};
}

// ---------------------------------------------------------------- products

enum class Kind { european, timer, swap };

struct Product {
    Kind kind = Kind::european;
    std::string section;
    double strike = 100.0;
    double maturity = 1.0;
    bool call = true;
    int n = 100;  // timer monitoring dates or swap periods
    double budget = 0.1;
    std::vector<double> schedule;
    int m = 2;
    std::string weight_name = "constant";
    th_weight weight = TH_WEIGHT_CONSTANT;
    th_lag lag = TH_LAG_SAME_PERIOD;
    double corridor_lower = 0.0, corridor_upper = 0.0;
    th_derivative derivative = TH_DERIVATIVE_CONTOUR;
};

const std::vector<std::string>& product_keys(Kind k) {
    static const std::vector<std::string> eu{"strike", "maturity", "type"};
    static const std::vector<std::string> ti{"strike", "maturity", "n_monitoring", "budget"};
    static const std::vector<std::string> sw{"maturity", "n_periods", "schedule", "m", "weight",
                                             "lag", "corridor_lower", "corridor_upper", "derivative"};
    return k == Kind::european ? eu : k == Kind::timer ? ti : sw;
}

const Section* product_section(const ConfigFile& cfg, Kind* kind) {
    const Section* found = nullptr;
    for (const auto& s : cfg.sections) {
        if (s.name.rfind("product.", 0) != 0) continue;
        if (found)
            throw ConfigError("exactly one [product.*] section is allowed; found [" + found->name + "] and [" +
                                  s.name + "]",
                              s.line, 1);
        found = &s;
    }
    if (found && kind)
        *kind = found->name == "product.european" ? Kind::european
                : found->name == "product.timer"  ? Kind::timer
                                                  : Kind::swap;
    return found;
}

int to_int(const Entry& e) {
    const long long x = to_integer(e);
    if (x < -2000000000LL || x > 2000000000LL) throw ConfigError("'" + e.key + "' is out of range", e.line, e.value_column);
    return static_cast<int>(x);
}

Product build_product(const ConfigFile& cfg) {
    Product p;
    const Section* s = product_section(cfg, &p.kind);
    if (!s) throw ConfigError("this command needs a [product.european], [product.timer] or [product.swap] section");
    p.section = s->name;
    const auto& allowed = product_keys(p.kind);
    bool have_schedule = false, have_grid = false;
    if (p.kind == Kind::swap) p.n = 252;
    for (const auto& e : s->entries) {
        if (std::find(allowed.begin(), allowed.end(), e.key) == allowed.end()) throw unknown_key(e, s->name);
        if (e.key == "strike") p.strike = to_double(e);
        else if (e.key == "maturity") p.maturity = to_double(e), have_grid = true;
        else if (e.key == "budget") p.budget = to_double(e);
        else if (e.key == "n_monitoring") p.n = to_int(e);
        else if (e.key == "n_periods") p.n = to_int(e), have_grid = true;
        else if (e.key == "m") p.m = to_int(e);
        else if (e.key == "corridor_lower") p.corridor_lower = to_double(e);
        else if (e.key == "corridor_upper") p.corridor_upper = to_double(e);
        else if (e.key == "schedule") p.schedule = to_list(e), have_schedule = true;
        else if (e.key == "type") {
            if (e.value != "call" && e.value != "put") throw ConfigError("type must be call or put", e.line, e.value_column);
            p.call = e.value == "call";
        } else if (e.key == "weight") {
            static const std::map<std::string, th_weight> w{{"constant", TH_WEIGHT_CONSTANT},
                                                            {"price_ratio", TH_WEIGHT_PRICE_RATIO},
                                                            {"corridor", TH_WEIGHT_CORRIDOR},
                                                            {"terminal_price", TH_WEIGHT_TERMINAL_PRICE},
                                                            {"self_quantoed", TH_WEIGHT_TERMINAL_PRICE}};
            const auto it = w.find(e.value);
            if (it == w.end())
                throw ConfigError("weight must be constant, price_ratio, corridor, terminal_price or self_quantoed",
                                  e.line, e.value_column);
            p.weight = it->second;
            p.weight_name = e.value;
        } else if (e.key == "lag") {
            if (e.value != "same_period" && e.value != "previous_period")
                throw ConfigError("lag must be same_period or previous_period", e.line, e.value_column);
            p.lag = e.value == "same_period" ? TH_LAG_SAME_PERIOD : TH_LAG_PREVIOUS_PERIOD;
        } else if (e.key == "derivative") {
            if (e.value != "contour" && e.value != "finite_difference")
                throw ConfigError("derivative must be contour or finite_difference", e.line, e.value_column);
            p.derivative = e.value == "contour" ? TH_DERIVATIVE_CONTOUR : TH_DERIVATIVE_FINITE_DIFFERENCE;
        }
    }
    if (p.kind == Kind::swap) {
        if (have_schedule && have_grid) throw ConfigError("give schedule or maturity/n_periods, not both", s->line, 1);
        if (have_schedule) {
            if (p.schedule.size() < 2) throw ConfigError("schedule needs at least two times", s->line, 1);
            p.n = static_cast<int>(p.schedule.size()) - 1;
            p.maturity = p.schedule.back();
        } else {
            if (p.n < 1) throw ConfigError("n_periods must be >= 1", s->line, 1);
            // Same grid as the library's uniform schedule: t_j = j T / N.
            for (int j = 0; j <= p.n; ++j) p.schedule.push_back(p.maturity * j / p.n);
        }
    }
    return p;
}

// ------------------------------------------------------------------ sweeps

struct Sweep {
    std::string section;
    std::string key;
    std::vector<double> values;
};

Sweep parse_sweep(const std::string& text, const ConfigFile& cfg) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--sweep needs KEY=start:end:count, got '" + text + "'");
    std::string key = text.substr(0, eq);
    Sweep sw;
    try {
        sw.values = parse_range(text.substr(eq + 1));
    } catch (const ConfigError& e) {
        throw ConfigError("--sweep " + key + ": " + e.what());
    }
    Kind kind = Kind::european;
    const Section* prod = product_section(cfg, &kind);

    if (const auto dot = key.find('.'); dot != std::string::npos) {
        sw.section = key.substr(0, dot);
        sw.key = key.substr(dot + 1);
        if (sw.section == "product") {
            if (!prod) throw ConfigError("--sweep " + key + ": no product section");
            sw.section = prod->name;
        }
        return sw;
    }
    static const std::map<std::string, std::string> alias{
        {"T", "maturity"}, {"B", "budget"}, {"K", "strike"}, {"N", "n_monitoring"}};
    if (const auto it = alias.find(key); it != alias.end()) {
        key = it->second;
        if (key == "n_monitoring" && kind == Kind::swap) key = "n_periods";
    }
    if (prod) {
        const auto& allowed = product_keys(kind);
        if (std::find(allowed.begin(), allowed.end(), key) != allowed.end()) return {prod->name, key, sw.values};
    }
    if (is_model_key(key)) return {"model", key, sw.values};
    throw ConfigError("--sweep: '" + key + "' is not a product or model key");
}

// "--sweep T=0.5:2:4, B=0.05:0.2:4" arrives as one or several tokens; split
// at commas that start a new KEY=.
std::vector<std::string> split_sweeps(const std::vector<std::string>& args) {
    std::string joined;
    for (const auto& a : args) joined += (joined.empty() ? "" : ",") + a;
    static const std::regex sep(R"(\s*,[\s,]*(?=[A-Za-z_][A-Za-z0-9_.]*=))");
    std::vector<std::string> out;
    for (std::sregex_token_iterator it(joined.begin(), joined.end(), sep, -1), end; it != end; ++it) {
        std::string s = *it;
        while (!s.empty() && (s.back() == ',' || s.back() == ' ')) s.pop_back();
        while (!s.empty() && s.front() == ' ') s.erase(0, 1);
        if (!s.empty()) out.push_back(s);
    }
    return out;
}

// Cartesian product, first sweep outermost.
std::vector<ConfigFile> expand(const ConfigFile& base, const std::vector<Sweep>& sweeps) {
    std::vector<ConfigFile> out{base};
    for (const auto& sw : sweeps) {
        std::vector<ConfigFile> next;
        for (const auto& c : out)
            for (double v : sw.values) {
                ConfigFile copy = c;
                auto& sec = copy.get_or_add(sw.section);
                // Sweeping theta replaces any curve given in the file.
                if (sw.section == "model" && sw.key == "theta") {
                    std::erase_if(sec.entries,
                                  [](const Entry& e) { return e.key == "theta_breaks" || e.key == "theta_values"; });
                }
                sec.set(sw.key, format_number(v));
                next.push_back(std::move(copy));
            }
        out = std::move(next);
    }
    return out;
}

// -------------------------------------------------------------------- CSV

const char* const kHeader =
    "command,product,maturity,strike,option_type,n_monitoring,budget,m,weight,lag,corridor_lower,corridor_upper,"
    "kappa,theta,epsilon,rho,r,q,s0,v0,jump_lambda,jump_mu,jump_sigma,"
    "value,err_estimate,mc_value,mc_std_error,mc_discrete_value,mc_discrete_std_error,mc_within_3se";

struct Row {
    std::string command;
    Product product;
    std::vector<std::string> model;  // kappa .. jump_sigma
    double value = 0.0, err = 0.0;
    std::optional<th_estimate> mc, mc_discrete, mc_gap;
};

std::vector<std::string> model_columns(const th_model* m, const ConfigFile& cfg) {
    std::vector<std::string> out;
    for (const char* k : kModelKeys) {
        double x = 0.0;
        if (std::string(k) == "theta" && cfg.find("model") && cfg.find("model")->find("theta_breaks")) {
            out.push_back("curve");
            continue;
        }
        check(th_model_get(m, k, &x));
        out.push_back(format_number(x));
    }
    return out;
}

std::string csv_line(const Row& r) {
    const Product& p = r.product;
    const bool eu = p.kind == Kind::european, ti = p.kind == Kind::timer, sw = p.kind == Kind::swap;
    std::vector<std::string> f;
    f.push_back(r.command);
    f.push_back(eu ? "european" : ti ? "timer" : "swap");
    f.push_back(format_number(p.maturity));
    f.push_back(sw ? "" : format_number(p.strike));
    f.push_back(eu ? (p.call ? "call" : "put") : ti ? "call" : "");
    f.push_back(eu ? "" : std::to_string(p.n));
    f.push_back(ti ? format_number(p.budget) : "");
    f.push_back(sw ? std::to_string(p.m) : "");
    f.push_back(sw ? p.weight_name : "");
    f.push_back(sw ? (p.lag == TH_LAG_SAME_PERIOD ? "same_period" : "previous_period") : "");
    const bool corridor = sw && p.weight == TH_WEIGHT_CORRIDOR;
    f.push_back(corridor ? format_number(p.corridor_lower) : "");
    f.push_back(corridor ? format_number(p.corridor_upper) : "");
    for (const auto& m : r.model) f.push_back(m);
    f.push_back(format_number(r.value));
    f.push_back(format_number(r.err));
    if (r.mc) {
        f.push_back(format_number(r.mc->value));
        f.push_back(format_number(r.mc->std_error));
    } else {
        f.insert(f.end(), {"", ""});
    }
    if (r.mc_discrete) {
        f.push_back(format_number(r.mc_discrete->value));
        f.push_back(format_number(r.mc_discrete->std_error));
    } else {
        f.insert(f.end(), {"", ""});
    }
    f.push_back(r.mc ? (std::abs(r.value - r.mc->value) <= 3.0 * r.mc->std_error ? "true" : "false") : "");
    std::string line;
    for (std::size_t k = 0; k < f.size(); ++k) line += (k ? "," : "") + f[k];
    return line;
}

std::string output_path(const Options& opt, const ConfigFile& cfg) {
    if (!opt.out_path.empty()) return opt.out_path;
    if (const Section* s = cfg.find("output")) {
        for (const auto& e : s->entries) {
            if (e.key == "format") {
                if (e.value != "csv") throw ConfigError("only format = csv is supported", e.line, e.value_column);
            } else if (e.key != "path") {
                throw unknown_key(e, "output");
            }
        }
        if (const Entry* p = s->find("path")) return p->value;
    }
    return {};
}

// Writes the header for a new or empty file and appends otherwise. Runs
// that draw random numbers carry the seed in a comment line first.
void write_csv(const std::string& path, const std::string& header, const std::vector<std::string>& lines,
               std::optional<std::uint64_t> seed, std::ostream& fallback) {
    std::ostringstream block;
    bool fresh = true;
    if (!path.empty()) {
        std::ifstream probe(path, std::ios::binary | std::ios::ate);
        fresh = !probe || probe.tellg() == 0;
    }
    if (seed) block << "# seed=" << *seed << '\n';
    if (fresh) block << header << '\n';
    for (const auto& l : lines) block << l << '\n';
    if (path.empty()) {
        fallback << block.str();
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw ConfigError("cannot write output file '" + path + "'");
    out << block.str();
    if (!out) throw ConfigError("write to '" + path + "' failed");
}

// ---------------------------------------------------------------- commands

std::string fmt(double x, int prec = 10) {
    std::ostringstream os;
    os << std::setprecision(prec) << x;
    return os.str();
}

void require_admissible(const th_model* m) {
    char buf[2048];
    if (th_model_check(m, buf, sizeof buf) == TH_OK) return;
    throw ApiError(TH_ERR_CONSTRAINT, std::string("model parameters are not admissible:\n") + buf);
}

std::string describe(const Product& p) {
    std::ostringstream os;
    if (p.kind == Kind::european)
        os << "european " << (p.call ? "call" : "put") << " K=" << fmt(p.strike) << " T=" << fmt(p.maturity);
    else if (p.kind == Kind::timer)
        os << "timer call K=" << fmt(p.strike) << " T=" << fmt(p.maturity) << " N=" << p.n << " B=" << fmt(p.budget);
    else
        os << "swap m=" << p.m << " weight=" << p.weight_name << " N=" << p.n << " T=" << fmt(p.maturity);
    return os.str();
}

th_swap_spec swap_spec(const Product& p) {
    return {p.schedule.data(), p.schedule.size(), p.m, p.weight, p.lag, p.corridor_lower, p.corridor_upper,
            p.derivative};
}

std::string section_text(const ConfigFile& cfg, const char* name) {
    std::string s;
    if (const Section* sec = cfg.find(name))
        for (const auto& e : sec->entries) s += e.key + "=" + e.value + ";";
    return s;
}

int cmd_price(const Options& opt, const ConfigFile& base, std::ostream& out) {
    std::vector<Sweep> sweeps;
    for (const auto& s : split_sweeps(opt.sweeps)) sweeps.push_back(parse_sweep(s, base));
    const auto points = expand(base, sweeps);
    const bool with_mc = opt.mc_check || opt.command == "mc-compare";
    const auto path = output_path(opt, base);

    struct Job {
        ModelPtr model;
        QuadPtr quad;
        Simulation sim;
        Row row;
    };
    std::vector<Job> jobs;
    for (const auto& cfg : points) {
        Job j{build_model(cfg), build_quadrature(cfg), build_simulation(cfg, opt.seed), {}};
        j.row.command = opt.command;
        j.row.product = build_product(cfg);
        j.row.model = model_columns(j.model.get(), cfg);
        require_admissible(j.model.get());
        jobs.push_back(std::move(j));
    }

    // Timer quotes sharing model, quadrature, T and N are priced on one grid.
    std::map<std::string, std::vector<std::size_t>> timer_groups;
    for (std::size_t k = 0; k < jobs.size(); ++k) {
        const Product& p = jobs[k].row.product;
        if (p.kind != Kind::timer) continue;
        const auto& cfg = points[k];
        timer_groups[section_text(cfg, "model") + "|" + section_text(cfg, "quadrature") + "|" +
                     format_number(p.maturity) + "|" + std::to_string(p.n)]
            .push_back(k);
    }
    for (const auto& [key, idx] : timer_groups) {
        std::vector<double> strikes, budgets;
        for (auto k : idx) {
            strikes.push_back(jobs[k].row.product.strike);
            budgets.push_back(jobs[k].row.product.budget);
        }
        std::vector<th_price> res(idx.size());
        const Job& first = jobs[idx.front()];
        check(th_price_timer_calls(first.model.get(), first.quad.get(), first.row.product.maturity,
                                   first.row.product.n, strikes.data(), budgets.data(), idx.size(), res.data()));
        for (std::size_t q = 0; q < idx.size(); ++q) {
            jobs[idx[q]].row.value = res[q].value;
            jobs[idx[q]].row.err = res[q].err_estimate;
        }
    }

    std::optional<std::uint64_t> seed;
    std::vector<std::string> lines;
    for (auto& j : jobs) {
        Row& r = j.row;
        const Product& p = r.product;
        if (p.kind == Kind::european) {
            th_price pr{};
            check(th_price_european(j.model.get(), j.quad.get(), p.strike, p.maturity, p.call ? 1 : 0, &pr));
            r.value = pr.value;
            r.err = pr.err_estimate;
        } else if (p.kind == Kind::swap) {
            th_price pr{};
            const auto spec = swap_spec(p);
            check(th_fair_strike(j.model.get(), j.quad.get(), &spec, &pr));
            r.value = pr.value;
            r.err = pr.err_estimate;
        }
        if (with_mc) {
            seed = j.sim.seed;
            th_estimate e{};
            if (p.kind == Kind::european) {
                check(th_mc_european(j.model.get(), j.sim.handle.get(), p.strike, p.maturity, p.call ? 1 : 0, &e));
                r.mc = e;
            } else if (p.kind == Kind::timer) {
                th_estimate d{}, g{};
                check(th_mc_timer(j.model.get(), j.sim.handle.get(), p.strike, p.maturity, p.n, p.budget, &e, &d, &g));
                r.mc = e;
                r.mc_discrete = d;
                r.mc_gap = g;
            } else {
                const auto spec = swap_spec(p);
                check(th_mc_fair_strike(j.model.get(), j.sim.handle.get(), &spec, &e));
                r.mc = e;
            }
        }

        out << describe(p) << ": " << (p.kind == Kind::swap ? "fair strike " : "price ") << fmt(r.value)
            << "  (quadrature error " << fmt(r.err, 3) << ")\n";
        if (r.mc) {
            const double z = r.mc->std_error > 0 ? (r.value - r.mc->value) / r.mc->std_error : 0.0;
            out << "  mc " << (p.kind == Kind::timer ? "(qv proxy) " : "") << fmt(r.mc->value) << " +- "
                << fmt(r.mc->std_error, 3) << "  diff/se " << fmt(z, 3)
                << (std::abs(z) <= 3.0 ? "  within 3 se" : "  OUTSIDE 3 se") << '\n';
            if (r.mc_discrete)
                out << "  mc (discrete rv) " << fmt(r.mc_discrete->value) << " +- " << fmt(r.mc_discrete->std_error, 3)
                    << "  proxy gap " << fmt(r.mc_gap->value, 4) << " +- " << fmt(r.mc_gap->std_error, 3) << '\n';
        }
        lines.push_back(csv_line(r));
    }
    if (path.empty()) out << '\n';
    write_csv(path, kHeader, lines, seed, out);
    return exit_ok;
}

int cmd_validate(const ConfigFile& cfg, std::ostream& out) {
    auto model = build_model(cfg);
    build_quadrature(cfg);
    build_simulation(cfg, std::nullopt);
    if (product_section(cfg, nullptr)) build_product(cfg);
    for (const auto& s : cfg.sections) {
        out << '[' << s.name << "]\n";
        for (const auto& e : s.entries) out << e.key << " = " << e.value << '\n';
        out << '\n';
    }
    char buf[2048];
    if (th_model_check(model.get(), buf, sizeof buf) == TH_OK) {
        out << "admissible\n";
        return exit_ok;
    }
    out << "not admissible\n" << buf;
    return exit_constraint;
}

int cmd_grid(const Options& opt, const ConfigFile& cfg, std::ostream& out) {
    const Section* g = cfg.find("grid");
    if (!g) throw ConfigError("grid needs a [grid] section");
    auto model = build_model(cfg);
    auto quad = build_quadrature(cfg);
    require_admissible(model.get());
    double v0 = 0.0;
    check(th_model_get(model.get(), "v0", &v0));

    const Entry* kind_e = g->find("kind");
    if (!kind_e) throw ConfigError("[grid] needs kind = density, cf or conditional-cf", g->line, 1);
    const std::string kind = kind_e->value;
    static const std::map<std::string, std::vector<std::string>> keys{
        {"density", {"kind", "t", "v", "delta", "v_prime"}},
        {"cf", {"kind", "t", "v", "delta", "omega", "eta"}},
        {"conditional-cf", {"kind", "t", "v", "delta", "v_prime", "xi"}}};
    const auto it = keys.find(kind);
    if (it == keys.end())
        throw ConfigError("kind must be density, cf or conditional-cf", kind_e->line, kind_e->value_column);
    for (const auto& e : g->entries)
        if (std::find(it->second.begin(), it->second.end(), e.key) == it->second.end()) throw unknown_key(e, "grid");

    auto scalar = [&](const char* k, double def) { return g->find(k) ? to_double(*g->find(k)) : def; };
    auto list = [&](const char* k, std::vector<double> def) { return g->find(k) ? to_list(*g->find(k)) : def; };
    const double t = scalar("t", 0.0);
    const double v = scalar("v", v0);
    const auto deltas = list("delta", {0.25});

    std::ostringstream csv;
    if (kind == "density") {
        const auto vp = list("v_prime", parse_range("0.001:1:100"));
        csv << "t,v,t_prime,v_prime,density,normalization,normalization_err\n";
        for (double d : deltas) {
            double norm = 0.0, nerr = 0.0;
            check(th_density_normalization(model.get(), quad.get(), t, v, t + d, &norm, &nerr));
            for (double x : vp) {
                double dens = 0.0;
                check(th_transition_density_v(model.get(), t, v, t + d, x, &dens));
                csv << format_number(t) << ',' << format_number(v) << ',' << format_number(t + d) << ','
                    << format_number(x) << ',' << format_number(dens) << ',' << format_number(norm) << ','
                    << format_number(nerr) << '\n';
            }
        }
    } else if (kind == "cf") {
        const auto om = list("omega", parse_range("-10:10:41"));
        const auto et = list("eta", {0.0});
        csv << "t,v,t_prime,omega,eta,re,im,abs,abs_le_1\n";
        for (double d : deltas)
            for (double e : et)
                for (double w : om) {
                    double re = 0.0, im = 0.0;
                    check(th_joint_cf(model.get(), t, v, t + d, w, 0.0, e, 0.0, &re, &im));
                    const double a = std::hypot(re, im);
                    csv << format_number(t) << ',' << format_number(v) << ',' << format_number(t + d) << ','
                        << format_number(w) << ',' << format_number(e) << ',' << format_number(re) << ','
                        << format_number(im) << ',' << format_number(a) << ',' << (a <= 1.0 + 1e-12 ? "true" : "false")
                        << '\n';
                }
    } else {
        const auto xs = list("xi", parse_range("0:10:11"));
        const auto vp = list("v_prime", {v});
        csv << "t,v,t_prime,v_prime,xi,re,im,abs\n";
        for (double d : deltas)
            for (double y : vp)
                for (double x : xs) {
                    double re = 0.0, im = 0.0;
                    check(th_conditional_cf(model.get(), x, 0.0, t, t + d, v, y, &re, &im));
                    csv << format_number(t) << ',' << format_number(v) << ',' << format_number(t + d) << ','
                        << format_number(y) << ',' << format_number(x) << ',' << format_number(re) << ','
                        << format_number(im) << ',' << format_number(std::hypot(re, im)) << '\n';
                }
    }
    const auto path = output_path(opt, cfg);
    if (path.empty()) {
        out << csv.str();
    } else {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw ConfigError("cannot write output file '" + path + "'");
        f << csv.str();
    }
    return exit_ok;
}

int exit_for(th_status s) {
    switch (s) {
        case TH_ERR_UNKNOWN_KEY:
        case TH_ERR_INVALID_ARGUMENT: return exit_config;
        case TH_ERR_CONSTRAINT: return exit_constraint;
        default: return exit_numeric;
    }
}

}  // namespace

int run(const Options& opt, std::ostream& out, std::ostream& err) {
    const auto start = std::chrono::steady_clock::now();
    try {
        const ConfigFile cfg = load_config(opt.config_path);
        int rc = exit_ok;
        if (opt.command == "validate") rc = cmd_validate(cfg, out);
        else if (opt.command == "grid") rc = cmd_grid(opt, cfg, out);
        else if (opt.command == "price" || opt.command == "mc-compare") rc = cmd_price(opt, cfg, out);
        else throw ConfigError("unknown command '" + opt.command + "'");
        if (opt.command != "validate") {
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            err << "wall time " << std::fixed << std::setprecision(3) << secs << " s\n";
        }
        return rc;
    } catch (const ConfigError& e) {
        err << "config error: " << opt.config_path << ": " << e.what() << '\n';
        return exit_config;
    } catch (const ApiError& e) {
        err << "error: " << e.what() << '\n';
        return exit_for(e.status);
    }
}

}  // namespace cli
