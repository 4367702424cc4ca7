// pulab: command-line front end. One experiment per invocation; every
// artifact carries its config and the version string in its header.

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <map>
#include <random>

#include <pulab/io.hpp>
#include <pulab/ostrogradsky.hpp>
#include <pulab/propagator.hpp>
#include <pulab/quantum_lab.hpp>
#include <pulab/special_functions.hpp>
#include <pulab/spectral_decomposition.hpp>

using nlohmann::json;
using namespace pulab;

namespace {

enum class Kind { real, integer, text, reals, integers };

struct Field {
    std::string key;
    Kind kind;
    json fallback;
    std::string help;
};

/// Typed view of a validated params object.
class Params {
public:
    explicit Params(const json& j) : j_(j) {}
    double real(const std::string& k) const { return j_.at(k).get<double>(); }
    int integer(const std::string& k) const { return j_.at(k).get<int>(); }
    std::string text(const std::string& k) const { return j_.at(k).get<std::string>(); }
    std::vector<double> reals(const std::string& k) const { return j_.at(k).get<std::vector<double>>(); }
    std::vector<int> integers(const std::string& k) const { return j_.at(k).get<std::vector<int>>(); }

private:
    const json& j_;
};

using Runner = std::function<int(const ExperimentConfig&, const Params&)>;

struct Command {
    Command(std::string g, std::string n, std::string h, std::vector<Field> f, Runner r)
        : group(std::move(g)), name(std::move(n)), help(std::move(h)), fields(std::move(f)), run(std::move(r)) {}

    std::string group, name, help;
    std::vector<Field> fields;
    Runner run;
    std::map<std::string, std::string> raw;  // flag text, filled by CLI11
    CLI::App* app = nullptr;

    std::string full_name() const { return group + " " + name; }
};

bool matches(const json& v, Kind k) {
    switch (k) {
        case Kind::real: return v.is_number();
        case Kind::integer: return v.is_number_integer();
        case Kind::text: return v.is_string();
        case Kind::reals:
            return v.is_array() && !v.empty() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); });
        case Kind::integers:
            return v.is_array() && !v.empty() &&
                   std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number_integer(); });
    }
    return false;
}

std::string flag_name(std::string key) {
    std::replace(key.begin(), key.end(), '_', '-');
    return "--" + key;
}

json parse_flag(const Field& f, const std::string& s) {
    auto number = [&](const std::string& t) -> json {
        std::size_t used = 0;
        try {
            if (f.kind == Kind::integer || f.kind == Kind::integers) {
                const long v = std::stol(t, &used);
                if (used == t.size()) return v;
            } else {
                const double v = std::stod(t, &used);
                if (used == t.size()) return v;
            }
        } catch (const std::exception&) {
        }
        throw InvalidArgument(flag_name(f.key) + ": cannot parse '" + t + "'");
    };
    switch (f.kind) {
        case Kind::text: return s;
        case Kind::real:
        case Kind::integer: return number(s);
        case Kind::reals:
        case Kind::integers: {
            json out = json::array();
            std::stringstream ss(s);
            std::string item;
            while (std::getline(ss, item, ',')) out.push_back(number(item));
            if (out.empty()) throw InvalidArgument(flag_name(f.key) + ": empty list");
            return out;
        }
    }
    return nullptr;
}

/// Defaults, then flags, then the config file (which wins).
ExperimentConfig assemble(const Command& c, const std::string& config_path) {
    ExperimentConfig cfg{c.full_name(), json::object()};
    for (const auto& f : c.fields) cfg.params[f.key] = f.fallback;
    for (const auto& f : c.fields) {
        auto it = c.raw.find(f.key);
        if (it != c.raw.end() && c.app->count(flag_name(f.key)) > 0) cfg.params[f.key] = parse_flag(f, it->second);
    }
    if (!config_path.empty()) {
        const ExperimentConfig file = load_config_file(config_path);
        if (file.command != cfg.command)
            throw InvalidArgument("config is for '" + file.command + "', not '" + cfg.command + "'");
        for (const auto& [k, v] : file.params.items()) {
            if (!cfg.params.contains(k)) throw InvalidArgument("config: unknown parameter '" + k + "'");
            cfg.params[k] = v;
        }
    }
    for (const auto& f : c.fields)
        if (!matches(cfg.params[f.key], f.kind)) throw InvalidArgument("parameter '" + f.key + "' has the wrong type");
    return cfg;
}

std::filesystem::path output_path(const Params& p) { return resolve_output(p.text("output")); }

void announce(const std::filesystem::path& path, const std::string& summary) {
    std::cout << path.string() << '\n';
    if (!summary.empty()) std::cout << summary << '\n';
}

void write_json(const std::filesystem::path& path, const ExperimentConfig& cfg, const json& result) {
    auto out = open_output(path);
    out << json_artifact(cfg, result).dump(2) << '\n';
}

int verdict(bool pass, const std::string& what) {
    if (pass) return 0;
    std::cerr << "check failed: " << what << '\n';
    return exit_code(ErrorKind::accuracy);
}

PUParams pu_params(const Params& p) {
    PUParams q{p.real("omega_cap"), p.real("hbar")};
    q.validate();
    return q;
}

NonlocalParams nonlocal_params(const Params& p) {
    NonlocalParams q{p.real("omega"), p.real("delay"), p.real("hbar")};
    q.validate();
    return q;
}

PhaseState initial_state(const Params& p) {
    return ostrogradsky_state(p.real("q"), p.real("q_dot"), p.real("q_ddot"), p.real("q_dddot"));
}

PotentialSign potential_sign(const std::string& s) {
    if (s == "inverted") return PotentialSign::inverted;
    if (s == "harmonic") return PotentialSign::harmonic;
    throw InvalidArgument("potential must be 'inverted' or 'harmonic'");
}

// ---------------------------------------------------------------- pu

const std::vector<Field> pu_fields = {
    {"omega_cap", Kind::real, 1.0, "frequency of the degenerate oscillator"},
    {"hbar", Kind::real, 1.0, "Planck constant"},
};

const std::vector<Field> initial_fields = {
    {"q", Kind::real, 1.0, "initial q"},
    {"q_dot", Kind::real, 0.5, "initial q'"},
    {"q_ddot", Kind::real, -0.3, "initial q''"},
    {"q_dddot", Kind::real, 0.2, "initial q'''"},
};

int pu_classical(const ExperimentConfig& cfg, const Params& p) {
    const PUParams pp = pu_params(p);
    const int n = p.integer("samples");
    require(n >= 2, "samples must be >= 2");
    require(p.real("t_max") > 0.0, "t_max must be > 0");
    const auto times = uniform_grid(0.0, p.real("t_max"), n);
    const PhaseState s0 = initial_state(p);
    const auto traj = integrate_flow(s0, pp, times);
    const double h0 = hamiltonian_pu(s0, pp), scale = hamiltonian_pu_scale(s0, pp);
    double drift = 0.0;
    for (const auto& s : traj) drift = std::max(drift, std::abs(hamiltonian_pu(s, pp) - h0) / scale);
    const json result = {{"energy", h0}, {"max_relative_energy_drift", drift}};
    const auto path = output_path(p);
    auto out = open_output(path);
    CsvWriter w(out, cfg, {"t", "q1", "q2", "pi1", "pi2", "H", "X"}, result);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto& s = traj[i];
        w.row({times[i], s.q1, s.q2, s.pi1, s.pi2, hamiltonian_pu(s, pp), x_observable(s, pp)});
    }
    announce(path, "max relative energy drift " + format_number(drift));
    return verdict(drift <= p.real("tolerance"), "energy drift above tolerance");
}

int pu_decouple_check(const ExperimentConfig& cfg, const Params& p) {
    const PUParams pp = pu_params(p);
    std::mt19937_64 rng(static_cast<std::uint64_t>(p.integer("seed")));
    const double range = p.real("range");
    std::uniform_real_distribution<double> u(-range, range);
    const auto path = output_path(p);
    auto out = open_output(path);
    std::vector<std::array<double, 6>> rows;
    double worst_h = 0.0, worst_x = 0.0, worst_symp = 0.0;
    for (int i = 0; i < p.integer("samples"); ++i) {
        const PhaseState s{u(rng), u(rng), u(rng), u(rng)};
        const DecoupledState d = decouple(s, pp);
        const double scale = hamiltonian_pu_scale(s, pp);
        const double dh = std::abs(hamiltonian_pu(s, pp) - hamiltonian_decoupled(d, pp)) / scale;
        const double dx = std::abs(x_observable(s, pp) - x_in_decoupled(d, pp)) / std::max(1.0, std::abs(x_observable(s, pp)));
        const double sd = symplectic_defect(decouple_jacobian(s, pp));
        worst_h = std::max(worst_h, dh);
        worst_x = std::max(worst_x, dx);
        worst_symp = std::max(worst_symp, sd);
        rows.push_back({static_cast<double>(i), hamiltonian_pu(s, pp), hamiltonian_decoupled(d, pp), dh, dx, sd});
    }
    const double tol = p.real("tolerance");
    const json result = {{"max_hamiltonian_difference", worst_h},
                         {"max_x_difference", worst_x},
                         {"max_symplectic_defect", worst_symp},
                         {"pass", worst_h <= tol && worst_x <= tol && worst_symp <= tol}};
    CsvWriter w(out, cfg, {"sample", "H_pu", "H_decoupled", "rel_difference", "x_difference", "symplectic_defect"},
                result);
    for (const auto& r : rows) w.row({r[0], r[1], r[2], r[3], r[4], r[5]});
    announce(path, "max |H - H_dec| / scale " + format_number(worst_h));
    return verdict(result["pass"].get<bool>(), "decoupling identities");
}

int pu_x_growth(const ExperimentConfig& cfg, const Params& p) {
    const PUParams pp = pu_params(p);
    const auto g = x_growth_fit(initial_state(p), pp, static_cast<std::size_t>(p.integer("samples")));
    const json result = {{"slope", g.fit.slope},
                         {"expected_slope", pp.omega_cap},
                         {"intercept", g.fit.intercept},
                         {"max_fit_residual", g.fit.max_residual}};
    const auto path = output_path(p);
    auto out = open_output(path);
    CsvWriter w(out, cfg, {"t", "log_abs_X"}, result);
    for (std::size_t i = 0; i < g.times.size(); ++i) w.row({g.times[i], g.log_abs_x[i]});
    announce(path, "growth rate " + format_number(g.fit.slope));
    return verdict(std::abs(g.fit.slope - pp.omega_cap) <= p.real("tolerance") * pp.omega_cap, "growth rate");
}

// ---------------------------------------------------------------- nonlocal

const std::vector<Field> nonlocal_fields = {
    {"omega", Kind::real, 1.0, "frequency"},
    {"delay", Kind::real, 1.0, "nonlocality T"},
    {"hbar", Kind::real, 1.0, "Planck constant"},
    {"pairs", Kind::integer, kDefaultTruncation, "complex mode pairs kept"},
    {"radius", Kind::real, 40.0, "search radius"},
};

ModeDecomposition modes_with_residues(const Params& p, int pairs = -1) {
    const NonlocalParams np = nonlocal_params(p);
    return residues(find_modes(np, pairs > 0 ? pairs : p.integer("pairs"), p.real("radius")), np);
}

int nonlocal_modes(const ExperimentConfig& cfg, const Params& p) {
    const NonlocalParams np = nonlocal_params(p);
    const ModeDecomposition d = modes_with_residues(p);
    double worst = 0.0;
    for (const cplx z : root_list(d)) worst = std::max(worst, characteristic_residual(z, np) / std::max(1.0, std::norm(z)));
    json result = d;
    result["max_scaled_residual"] = worst;
    const auto path = output_path(p);
    write_json(path, cfg, result);
    announce(path, std::to_string(d.real_modes.size()) + " real, " + std::to_string(d.complex_modes.size()) +
                       " complex pairs; max residual " + format_number(worst));
    return verdict(worst <= 1e-10, "root residuals");
}

int nonlocal_residues(const ExperimentConfig& cfg, const Params& p) {
    const ModeDecomposition d = modes_with_residues(p);
    const auto path = output_path(p);
    auto out = open_output(path);
    CsvWriter w(out, cfg, columns({{"complex", "index"}, complex_columns("root"), complex_columns("eta")}),
                {{"tail_bound", d.tail_bound}});
    for (std::size_t i = 0; i < d.real_modes.size(); ++i)
        w.row({0, i, cplx(0.0, d.real_modes[i].omega_i), cplx(d.real_modes[i].eta)});
    for (std::size_t i = 0; i < d.complex_modes.size(); ++i)
        w.row({1, i, d.complex_modes[i].root, d.complex_modes[i].eta});
    announce(path, "");
    return 0;
}

int nonlocal_pf_check(const ExperimentConfig& cfg, const Params& p) {
    const NonlocalParams np = nonlocal_params(p);
    const auto ks = p.integers("pair_counts");
    const ModeDecomposition d = modes_with_residues(p, *std::max_element(ks.begin(), ks.end()));
    const cplx z(p.real("z_re"), p.real("z_im"));
    const cplx target = partial_fraction_target(z, np);
    const auto path = output_path(p);
    auto out = open_output(path);
    CsvWriter w(out, cfg, columns({{"pairs"}, complex_columns("expansion"), complex_columns("target"), {"rel_error"}}),
                {{"tail_bound", d.tail_bound}});
    double last = 0.0;
    for (int k : ks) {
        require(k >= 0, "pair_counts must be >= 0");
        const cplx v = partial_fraction_eval(d, z, k);
        last = rel_err(v, target);
        w.row({k, v, target, last});
    }
    announce(path, "relative error at largest K " + format_number(last));
    return 0;
}

int nonlocal_trajectory(const ExperimentConfig& cfg, const Params& p) {
    const NonlocalParams np = nonlocal_params(p);
    const ModeDecomposition d = modes_with_residues(p);
    const auto roots = root_list(d);
    const int mode = p.integer("mode");
    const int n_real = static_cast<int>(d.real_modes.size());
    require(mode >= 0 && mode < n_real + static_cast<int>(d.complex_modes.size()), "mode index out of range");
    // a z and its conjugate with equal amplitude give a real q(t)
    std::vector<cplx> amp(roots.size(), 0.0);
    const std::size_t first = mode < n_real ? 2 * mode : 2 * n_real + 4 * (mode - n_real);
    amp[first] = amp[first + 1] = 0.5 * p.real("amplitude");
    const auto t = uniform_grid(0.0, p.real("t_max"), p.integer("samples"));
    const auto tr = mode_trajectory(d, np, amp, t);
    const auto path = output_path(p);
    auto out = open_output(path);
    double worst = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) worst = std::max(worst, tr.residual[i] / std::max(tr.scale[i], 1e-300));
    CsvWriter w(out, cfg, {"t", "q", "envelope", "residual", "scale"},
                {{"root", complex_to_json(roots[first])}, {"max_scaled_residual", worst}});
    for (std::size_t i = 0; i < t.size(); ++i) w.row({tr.t[i], tr.q[i], tr.envelope[i], tr.residual[i], tr.scale[i]});
    announce(path, "max scaled residual " + format_number(worst));
    return verdict(worst <= 1e-9, "trajectory residual");
}

int nonlocal_spectrum(const ExperimentConfig& cfg, const Params& p) {
    const ModeDecomposition d = modes_with_residues(p);
    const auto gens = spectrum_generators(d);
    const int levels = p.integer("levels");
    require(levels >= 1, "levels must be >= 1");
    std::vector<std::string> names = {"complex", "sign", "omega", "mu", "nu"};
    for (int n = 0; n < levels; ++n) names.push_back("level_" + std::to_string(n));
    const auto path = output_path(p);
    auto out = open_output(path);
    CsvWriter w(out, cfg, names);
    for (const auto& g : gens) {
        std::vector<Cell> row = {g.kind == GeneratorKind::dilatation_rotation, g.sign, g.omega, g.mu, g.nu};
        for (int n = 0; n < levels; ++n) row.emplace_back(generator_level(g, n, p.real("lambda"), p.real("hbar")));
        w.row(row);
    }
    announce(path, std::to_string(gens.size()) + " generators");
    return 0;
}

// ---------------------------------------------------------------- special functions

int sf_d_check(const ExperimentConfig& cfg, const Params& p) {
    const cplx nu(p.real("nu_re"), p.real("nu_im")), z(p.real("z_re"), p.real("z_im"));
    const PcfResult r = parabolic_cylinder_d_eval(nu, z);
    json routes = json::array();
    for (const auto& rv : parabolic_cylinder_d_routes(nu, z))
        routes.push_back({{"method", to_string(rv.method)}, {"value", complex_to_json(rv.value)}, {"error_estimate", rv.error_estimate}});
    json result = {{"value", complex_to_json(r.value)},
                   {"derivative", complex_to_json(r.derivative)},
                   {"method", to_string(r.method)},
                   {"error_estimate", r.error_estimate},
                   {"supported_region", pcf_supported(nu, z)},
                   {"routes", routes}};
    result["route_disagreement"] = routes.size() >= 2 ? json(parabolic_cylinder_d_cross_check(nu, z)) : json(nullptr);
    const auto path = output_path(p);
    write_json(path, cfg, result);
    announce(path, "D = " + format_number(r.value.real()) + " + " + format_number(r.value.imag()) + "i via " +
                       to_string(r.method));
    return 0;
}

int sf_eigenfunction(const ExperimentConfig& cfg, const Params& p) {
    const PUParams pp = pu_params(p);
    const int branch = p.integer("branch");
    require(branch == 1 || branch == -1, "branch must be +1 or -1");
    const auto xs = uniform_grid(p.real("x_min"), p.real("x_max"), p.integer("samples"));
    const auto path = output_path(p);
    auto out = open_output(path);
    CsvWriter w(out, cfg, columns({{"x"}, complex_columns("psi"), {"density"}}));
    for (double x : xs) {
        const cplx v = inverted_eigenfunction(p.real("epsilon"), branch, x, pp);
        w.row({x, v, std::norm(v)});
    }
    announce(path, "");
    return 0;
}

// ---------------------------------------------------------------- propagator

int propagator_closed(const ExperimentConfig& cfg, const Params& p) {
    const std::string kind = p.text("kind");
    const double t = p.real("t"), w = p.real("omega"), hb = p.real("hbar"), y = p.real("y");
    require(hb > 0.0 && t != 0.0, "need hbar > 0 and t != 0");
    std::function<cplx(double)> k;
    if (kind == "free")
        k = [&](double x) { return free_propagator(x, y, t, hb); };
    else if (kind == "inverted")
        k = [&](double x) { return inverted_propagator(x, y, t, w, hb); };
    else if (kind == "harmonic")
        k = [&](double x) { return harmonic_propagator(x, y, t, w, hb); };
    else if (kind == "pu") {
        const PUParams pp{w, hb};
        pp.validate();
        k = [&, pp](double x) { return pu_propagator(x, p.real("x2"), y, p.real("y2"), t, pp); };
    } else
        throw InvalidArgument("kind must be free, inverted, harmonic or pu");
    const auto xs = uniform_grid(p.real("x_min"), p.real("x_max"), p.integer("samples"));
    const auto path = output_path(p);
    auto out = open_output(path);
    CsvWriter w_(out, cfg, columns({{"x"}, complex_columns("kernel")}));
    for (double x : xs) w_.row({x, k(x)});
    announce(path, "");
    return 0;
}

int propagator_trotter(const ExperimentConfig& cfg, const Params& p) {
    const double t = p.real("t"), w = p.real("omega"), hb = p.real("hbar"), x = p.real("x"), y = p.real("y");
    const PotentialSign sign = potential_sign(p.text("potential"));
    const std::string rule_name = p.text("rule");
    require(rule_name == "endpoint-average" || rule_name == "midpoint", "rule must be endpoint-average or midpoint");
    const TrotterRule rule = rule_name == "midpoint" ? TrotterRule::midpoint : TrotterRule::endpoint_average;
    const cplx exact = sign == PotentialSign::inverted ? inverted_propagator(x, y, t, w, hb) : harmonic_propagator(x, y, t, w, hb);
    const auto steps = p.integers("steps");
    std::vector<double> err;
    for (int n : steps) err.push_back(rel_err(trotter_propagator(x, y, t, w, hb, n, sign, rule), exact));
    double order = 0.0;
    if (steps.size() >= 2) {
        const std::size_t a = steps.size() - 2, b = steps.size() - 1;
        order = std::log(err[a] / err[b]) / std::log(double(steps[b]) / steps[a]);
    }
    const auto path = output_path(p);
    auto out = open_output(path);
    CsvWriter w_(out, cfg, columns({{"steps"}, complex_columns("exact"), {"error"}}), {{"observed_order", order}});
    for (std::size_t i = 0; i < steps.size(); ++i) w_.row({steps[i], exact, err[i]});
    announce(path, "observed order " + format_number(order));
    return 0;
}

int propagator_spectral(const ExperimentConfig& cfg, const Params& p) {
    const PUParams pp = pu_params(p);
    const auto r = spectral_identity(p.real("E"), p.real("t_max"), {p.real("flat_fraction")}, pp);
    const json result = {{"energy", r.energy},      {"lhs", complex_to_json(r.lhs)},
                         {"rhs", r.rhs},            {"ratio", r.ratio},
                         {"constant", 1.0},         {"tail_estimate", r.tail_estimate},
                         {"tail_warning", r.tail_warning}};
    const auto path = output_path(p);
    write_json(path, cfg, result);
    announce(path, "ratio " + format_number(r.ratio));
    return verdict(std::abs(r.ratio - 1.0) <= p.real("tolerance"), "spectral identity ratio");
}

int propagator_euclid(const ExperimentConfig& cfg, const Params& p) {
    const int n = p.integer("samples");
    require(n >= 16 && p.real("tau_max") > 0.0, "need samples >= 16 and tau_max > 0");
    std::vector<double> tau(n);
    for (int i = 0; i < n; ++i) tau[i] = p.real("tau_max") * (i + 1) / n;
    const auto r = euclidean_pitfall(tau, p.real("omega"), p.real("hbar"));
    const auto path = output_path(p);
    auto out = open_output(path);
    CsvWriter w(out, cfg, columns({{"tau"}, complex_columns("inverted"), {"harmonic", "masked"}}), r.verdict);
    for (int i = 0; i < n; ++i) w.row({r.tau[i], r.inverted_value[i], r.harmonic_value[i], bool(r.masked[i])});
    announce(path, r.periodic ? "periodic, period " + format_number(r.detected_period) : "no period detected");
    return 0;
}

// ---------------------------------------------------------------- lab

int lab_evolve(const ExperimentConfig& cfg, const Params& p) {
    const Grid1D g{p.real("extent"), p.integer("points")};
    g.validate();
    const double hb = p.real("hbar");
    const PotentialSign sign = potential_sign(p.text("potential"));
    const SparseOp h = sign == PotentialSign::inverted ? build_hamiltonian_inverted(g, p.real("omega"), hb)
                                                       : build_hamiltonian_harmonic(g, p.real("omega"), hb);
    const auto s0 = gaussian_packet(g, p.real("x0"), p.real("p0"), p.real("sigma"), hb);
    const int steps = p.integer("steps"), stride = p.integer("stride");
    require(stride >= 1, "stride must be >= 1");
    const double dt = p.real("dt");
    const auto rec = evolve_tracked(s0, h, dt, steps, hb);
    const double drift = std::abs(rec.final_state.norm - s0.norm) / s0.norm;
    const json result = {{"relative_norm_drift", drift},
                         {"max_step_drift", rec.max_step_drift},
                         {"max_boundary_mass", rec.max_boundary_mass},
                         {"boundary_flag", rec.final_state.boundary_flag},
                         {"fidelity_with_initial", fidelity(s0, rec.final_state)}};
    const auto path = output_path(p);
    auto out = open_output(path);
    CsvWriter w(out, cfg, {"step", "t", "norm", "drift"}, result);
    w.row({0, 0.0, s0.norm, 0.0});
    for (int i = stride; i <= steps; i += stride) {
        const double nm = rec.norms[i - 1];
        w.row({i, i * dt, nm, (nm - s0.norm) / s0.norm});
    }
    announce(path, "relative norm drift " + format_number(drift) + (rec.final_state.boundary_flag ? " (boundary flag set)" : ""));
    return verdict(drift <= p.real("tolerance"), "norm drift");
}

int lab_dilrot(const ExperimentConfig& cfg, const Params& p) {
    const Grid2D g{p.real("extent"), p.integer("points")};
    g.validate();
    const double mu = p.real("mu"), nu = p.real("nu"), hb = p.real("hbar");
    const SparseOp h = build_hamiltonian_dilrot(g, mu, nu, hb);
    const int n_max = p.integer("n_max");
    require(n_max >= 1, "n_max must be >= 1");
    std::vector<double> ns, qs;
    std::vector<cplx> rq;
    for (int n = 0; n <= n_max; ++n) {
        const auto s = angular_state(g, [](double r) { return r * r * std::exp(-r * r / 2.0); }, n);
        rq.push_back(rayleigh_quotient(s, h));
        ns.push_back(n);
        qs.push_back(rq.back().real());
    }
    const auto fit = fit_line(ns, qs);
    json result = {{"hermiticity_defect", hermiticity_defect(h)},
                   {"slope", fit.slope},
                   {"expected_slope", hb * nu},
                   {"max_fit_residual", fit.max_residual}};
    const int steps = p.integer("steps");
    if (steps > 0) {
        const auto s = angular_state(g, [](double r) { return std::exp(-r * r / 2.0); }, 1);
        const auto rec = evolve_tracked(s, h, p.real("dt"), steps, hb);
        result["relative_norm_drift"] = std::abs(rec.final_state.norm - s.norm) / s.norm;
        result["boundary_flag"] = rec.final_state.boundary_flag;
    }
    const auto path = output_path(p);
    auto out = open_output(path);
    CsvWriter w(out, cfg, columns({{"n"}, complex_columns("rayleigh"), {"expected"}}), result);
    for (int n = 0; n <= n_max; ++n) w.row({n, rq[n], hb * nu * n});
    announce(path, "ladder slope " + format_number(fit.slope));
    return 0;
}

int lab_divergence(const ExperimentConfig& cfg, const Params& p) {
    const PUParams pp = pu_params(p);
    const EigenLabel bra{p.integer("bra_n"), p.real("bra_epsilon"), p.integer("bra_branch")};
    const EigenLabel ket{p.integer("ket_n"), p.real("ket_epsilon"), p.integer("ket_branch")};
    const auto scan = divergence_scan(bra, ket, p.reals("cutoffs"), pp, p.real("control_width"));
    const auto path = output_path(p);
    auto out = open_output(path);
    CsvWriter w(out, cfg,
                columns({{"cutoff"}, complex_columns("element"), complex_columns("control"),
                         {"increment", "control_increment"}}),
                {{"oscillator_overlap", scan.oscillator_overlap}, {"control_width", scan.control_width}});
    for (const auto& r : scan.rows) w.row({r.cutoff, r.element, r.control, r.increment, r.control_increment});
    announce(path, "");
    return 0;
}

int lab_commutator(const ExperimentConfig& cfg, const Params& p) {
    const PUParams pp{p.real("omega_cap"), p.real("hbar")};
    const auto pts = p.integers("points");
    std::vector<CommutatorResult> rs;
    for (int n : pts) rs.push_back(commutator_check({p.real("extent"), n}, pp, p.integer("order")));
    const double finest = rs.back().residual;
    const auto path = output_path(p);
    auto out = open_output(path);
    CsvWriter w(out, cfg, {"points", "spacing", "residual"}, {{"finest_residual", finest}});
    for (const auto& r : rs) w.row({r.points, r.spacing, r.residual});
    announce(path, "residual on finest grid " + format_number(finest));
    return verdict(finest <= p.real("tolerance"), "commutator residual");
}

std::vector<Field> with(std::vector<Field> base, const std::vector<Field>& more) {
    base.insert(base.end(), more.begin(), more.end());
    return base;
}

std::vector<Command> commands() {
    const std::vector<Field> nl = nonlocal_fields;
    return {
        {"pu", "classical", "integrate the fourth-order oscillator in Ostrogradsky variables",
         with(with(pu_fields, initial_fields),
              std::vector<Field>{{"t_max", Kind::real, 5.0, "final time"},
               {"samples", Kind::integer, 501, "output samples"},
               {"tolerance", Kind::real, 1e-9, "allowed relative energy drift"},
               {"output", Kind::text, "pu_classical.csv", "artifact path"}}),
         pu_classical},
        {"pu", "decouple-check", "check the decoupling map on random phase points",
         with(pu_fields, {{"samples", Kind::integer, 1000, "random states"},
                          {"seed", Kind::integer, 1, "RNG seed"},
                          {"range", Kind::real, 2.0, "coordinates drawn from [-range, range]"},
                          {"tolerance", Kind::real, 1e-12, "allowed defect"},
                          {"output", Kind::text, "pu_decouple_check.csv", "artifact path"}}),
         pu_decouple_check},
        {"pu", "x-growth", "fit the growth rate of the decoupled observable X",
         with(with(pu_fields, initial_fields),
              std::vector<Field>{{"samples", Kind::integer, 101, "fit density"},
               {"tolerance", Kind::real, 1e-6, "allowed relative slope error"},
               {"output", Kind::text, "pu_x_growth.csv", "artifact path"}}),
         pu_x_growth},
        {"nonlocal", "modes", "zeros of the characteristic function",
         with(nl, {{"output", Kind::text, "nonlocal_modes.json", "artifact path"}}), nonlocal_modes},
        {"nonlocal", "residues", "mode residues",
         with(nl, {{"output", Kind::text, "nonlocal_residues.csv", "artifact path"}}), nonlocal_residues},
        {"nonlocal", "pf-check", "partial-fraction expansion against the closed form",
         with(nl, {{"pair_counts", Kind::integers, json::array({1, 2, 4, 8, 16, 32, 64}), "truncations to tabulate"},
                   {"z_re", Kind::real, 0.5, "test point"},
                   {"z_im", Kind::real, 0.25, "test point"},
                   {"output", Kind::text, "nonlocal_pf_check.csv", "artifact path"}}),
         nonlocal_pf_check},
        {"nonlocal", "trajectory", "classical trajectory along one mode",
         with(nl, {{"mode", Kind::integer, 0, "mode index: real modes first, then complex pairs"},
                   {"amplitude", Kind::real, 1.0, "mode amplitude"},
                   {"t_max", Kind::real, 10.0, "final time"},
                   {"samples", Kind::integer, 201, "output samples"},
                   {"output", Kind::text, "nonlocal_trajectory.csv", "artifact path"}}),
         nonlocal_trajectory},
        {"nonlocal", "spectrum", "spectrum generators of the mode Hamiltonian",
         with(nl, {{"levels", Kind::integer, 3, "levels per generator"},
                   {"lambda", Kind::real, 0.0, "dilatation label"},
                   {"output", Kind::text, "nonlocal_spectrum.csv", "artifact path"}}),
         nonlocal_spectrum},
        {"sf", "d-check", "evaluate D_nu(z) by every applicable route",
         {{"nu_re", Kind::real, -0.5, "order"},
          {"nu_im", Kind::real, -1.0, "order"},
          {"z_re", Kind::real, 2.0, "argument"},
          {"z_im", Kind::real, 2.0, "argument"},
          {"output", Kind::text, "sf_d_check.json", "artifact path"}},
         sf_d_check},
        {"sf", "eigenfunction", "inverted-oscillator eigenfunction on a grid",
         with(pu_fields, {{"epsilon", Kind::real, 0.0, "energy"},
                          {"branch", Kind::integer, 1, "+1 or -1"},
                          {"x_min", Kind::real, -6.0, "grid start"},
                          {"x_max", Kind::real, 6.0, "grid end"},
                          {"samples", Kind::integer, 241, "grid points"},
                          {"output", Kind::text, "sf_eigenfunction.csv", "artifact path"}}),
         sf_eigenfunction},
        {"propagator", "closed", "closed-form kernels along x",
         {{"kind", Kind::text, "inverted", "free, inverted, harmonic or pu"},
          {"omega", Kind::real, 1.0, "frequency"},
          {"hbar", Kind::real, 1.0, "Planck constant"},
          {"t", Kind::real, 1.0, "time"},
          {"y", Kind::real, 0.0, "source point"},
          {"x2", Kind::real, 0.0, "second final coordinate (pu)"},
          {"y2", Kind::real, 0.0, "second source coordinate (pu)"},
          {"x_min", Kind::real, -5.0, "grid start"},
          {"x_max", Kind::real, 5.0, "grid end"},
          {"samples", Kind::integer, 201, "grid points"},
          {"output", Kind::text, "propagator_closed.csv", "artifact path"}},
         propagator_closed},
        {"propagator", "trotter-converge", "Trotter product against the exact kernel",
         {{"potential", Kind::text, "inverted", "inverted or harmonic"},
          {"rule", Kind::text, "endpoint-average", "endpoint-average or midpoint"},
          {"omega", Kind::real, 1.0, "frequency"},
          {"hbar", Kind::real, 1.0, "Planck constant"},
          {"t", Kind::real, 1.0, "time"},
          {"x", Kind::real, 0.7, "final point"},
          {"y", Kind::real, -0.4, "source point"},
          {"steps", Kind::integers, json::array({8, 16, 32, 64, 128, 256, 512}), "Trotter step counts"},
          {"output", Kind::text, "propagator_trotter.csv", "artifact path"}},
         propagator_trotter},
        {"propagator", "spectral-identity", "Fourier transform of K(0,0;t) against |psi(0)|^2",
         with(pu_fields, {{"E", Kind::real, 0.0, "energy"},
                          {"t_max", Kind::real, 40.0, "time window"},
                          {"flat_fraction", Kind::real, 0.8, "untapered part of the window"},
                          {"tolerance", Kind::real, 0.02, "allowed relative deviation of the ratio"},
                          {"output", Kind::text, "propagator_spectral_identity.json", "artifact path"}}),
         propagator_spectral},
        {"propagator", "euclid-pitfall", "imaginary-time continuation of the kernels",
         {{"omega", Kind::real, 1.0, "frequency"},
          {"hbar", Kind::real, 1.0, "Planck constant"},
          {"tau_max", Kind::real, 20.0, "largest tau"},
          {"samples", Kind::integer, 4000, "tau samples"},
          {"output", Kind::text, "propagator_euclid.csv", "artifact path"}},
         propagator_euclid},
        {"lab", "evolve", "Crank-Nicolson evolution of a Gaussian packet",
         {{"potential", Kind::text, "inverted", "inverted or harmonic"},
          {"omega", Kind::real, 1.0, "frequency"},
          {"hbar", Kind::real, 1.0, "Planck constant"},
          {"extent", Kind::real, 30.0, "grid half-width"},
          {"points", Kind::integer, 1024, "grid points"},
          {"x0", Kind::real, 0.0, "packet centre"},
          {"p0", Kind::real, 0.0, "packet momentum"},
          {"sigma", Kind::real, 1.0, "packet width"},
          {"dt", Kind::real, 1e-3, "time step"},
          {"steps", Kind::integer, 2000, "time steps"},
          {"stride", Kind::integer, 10, "steps between output rows"},
          {"tolerance", Kind::real, 1e-8, "allowed relative norm drift"},
          {"output", Kind::text, "lab_evolve.csv", "artifact path"}},
         lab_evolve},
        {"lab", "dilrot", "angular ladder of the dilatation-rotation generator",
         {{"mu", Kind::real, 0.0, "dilatation rate"},
          {"nu", Kind::real, 1.0, "rotation rate"},
          {"hbar", Kind::real, 1.0, "Planck constant"},
          {"extent", Kind::real, 12.0, "grid half-width"},
          {"points", Kind::integer, 256, "points per axis"},
          {"n_max", Kind::integer, 2, "largest angular number"},
          {"steps", Kind::integer, 0, "optional evolution steps"},
          {"dt", Kind::real, 5e-4, "evolution time step"},
          {"output", Kind::text, "lab_dilrot.csv", "artifact path"}},
         lab_dilrot},
        {"lab", "divergence-scan", "truncated matrix elements of X between continuum states",
         with(pu_fields, {{"bra_n", Kind::integer, 0, "bra oscillator number"},
                          {"bra_epsilon", Kind::real, 0.5, "bra energy"},
                          {"bra_branch", Kind::integer, 1, "bra branch"},
                          {"ket_n", Kind::integer, 0, "ket oscillator number"},
                          {"ket_epsilon", Kind::real, 1.0, "ket energy"},
                          {"ket_branch", Kind::integer, 1, "ket branch"},
                          {"cutoffs", Kind::reals, json::array({5.0, 10.0, 20.0, 40.0}), "cutoffs in oscillator units"},
                          {"control_width", Kind::real, 4.0, "width of the damped control"},
                          {"output", Kind::text, "lab_divergence_scan.csv", "artifact path"}}),
         lab_divergence},
        {"lab", "commutator", "[X, H] against i hbar W X on grids",
         with(pu_fields, {{"extent", Kind::real, 20.0, "grid half-width"},
                          {"points", Kind::integers, json::array({512, 1024, 2048}), "grid sizes"},
                          {"order", Kind::integer, 6, "stencil order: 2, 4 or 6"},
                          {"tolerance", Kind::real, 1e-6, "allowed residual on the finest grid"},
                          {"output", Kind::text, "lab_commutator.csv", "artifact path"}}),
         lab_commutator},
    };
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical experiments on higher-derivative and nonlocal oscillators"};
    app.set_version_flag("--version", version_string);
    app.require_subcommand(1);

    std::vector<Command> cmds = commands();
    std::map<std::string, CLI::App*> groups;
    std::string config_path;
    for (auto& c : cmds) {
        if (!groups.count(c.group)) {
            groups[c.group] = app.add_subcommand(c.group, c.group + " experiments");
            groups[c.group]->require_subcommand(1);
        }
        c.app = groups[c.group]->add_subcommand(c.name, c.help);
        c.app->add_option("--config", config_path, "JSON config; its params override flags")->check(CLI::ExistingFile);
        for (const auto& f : c.fields) {
            std::string def = f.fallback.is_string() ? f.fallback.get<std::string>() : f.fallback.dump();
            if (f.kind == Kind::reals || f.kind == Kind::integers) def = def.substr(1, def.size() - 2);
            const char* type = f.kind == Kind::real      ? "REAL"
                               : f.kind == Kind::integer ? "INT"
                               : f.kind == Kind::text    ? "TEXT"
                               : f.kind == Kind::reals   ? "REAL,..."
                                                         : "INT,...";
            c.app->add_option(flag_name(f.key), c.raw[f.key], f.help + " [" + def + "]")->type_name(type);
        }
    }

    std::vector<std::string> artifacts;
    std::string plot_output;
    auto* plot = app.add_subcommand("plot", "emit gnuplot scripts for artifacts");
    plot->add_option("artifacts", artifacts, "CSV artifacts")->required();
    plot->add_option("-o,--output", plot_output, "script path (single artifact only)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_code(ErrorKind::config);
    }

    try {
        if (plot->parsed()) {
            require(plot_output.empty() || artifacts.size() == 1, "--output needs exactly one artifact");
            for (const auto& a : artifacts) {
                const std::string script = plot_script(a);
                std::filesystem::path target = plot_output.empty()
                                                   ? std::filesystem::path(a).replace_extension(".gp")
                                                   : resolve_output(plot_output);
                auto out = open_output(target);
                out << script;
                std::cout << target.string() << '\n';
            }
            return 0;
        }
        for (auto& c : cmds) {
            if (!c.app->parsed()) continue;
            const ExperimentConfig cfg = assemble(c, config_path);
            return c.run(cfg, Params(cfg.params));
        }
        return exit_code(ErrorKind::internal);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_code(ErrorKind::config);
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return exit_code(ErrorKind::internal);
    }
}
