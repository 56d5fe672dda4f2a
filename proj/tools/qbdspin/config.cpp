#include "config.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>

namespace qbdspin::cli {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorKind::validation, "config: " + msg); }

// Object view that remembers which keys were read, so leftovers can be
// rejected as unknown.
class Section {
public:
    Section(const Json* j, std::string name) : j_(j), name_(std::move(name)) {
        if (j_ && !j_->is_object()) fail("'" + name_ + "' must be an object");
    }

    bool present() const { return j_ != nullptr; }
    bool has(const char* key) {
        used_.insert(key);
        return j_ && j_->contains(key);
    }

    double number(const char* key, double def) {
        if (!has(key)) return def;
        const Json& v = j_->at(key);
        if (!v.is_number()) fail(where(key) + " must be a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) fail(where(key) + " must be finite");
        return x;
    }
    std::int64_t integer(const char* key, std::int64_t def) {
        if (!has(key)) return def;
        return as_integer(j_->at(key), where(key));
    }
    std::uint64_t count(const char* key, std::uint64_t def) {
        if (!has(key)) return def;
        const Json& v = j_->at(key);
        if (v.is_number_unsigned()) return v.get<std::uint64_t>();
        const auto x = as_integer(v, where(key));
        if (x < 0) fail(where(key) + " must be >= 0");
        return static_cast<std::uint64_t>(x);
    }
    bool boolean(const char* key, bool def) {
        if (!has(key)) return def;
        const Json& v = j_->at(key);
        if (!v.is_boolean()) fail(where(key) + " must be true or false");
        return v.get<bool>();
    }
    std::string text(const char* key, const std::string& def) {
        if (!has(key)) return def;
        const Json& v = j_->at(key);
        if (!v.is_string()) fail(where(key) + " must be a string");
        return v.get<std::string>();
    }
    const Json* raw(const char* key) { return has(key) ? &j_->at(key) : nullptr; }
    const Json& array(const char* key) {
        const Json& v = j_->at(key);
        if (!v.is_array()) fail(where(key) + " must be an array");
        return v;
    }

    std::string where(const char* key) const { return name_.empty() ? key : name_ + "." + key; }

    void finish() const {
        if (!j_) return;
        for (auto it = j_->begin(); it != j_->end(); ++it)
            if (!used_.count(it.key())) fail("unknown key '" + where(it.key().c_str()) + "'");
    }

    static std::int64_t as_integer(const Json& v, const std::string& what) {
        if (v.is_number_integer()) return v.get<std::int64_t>();
        if (v.is_number_float()) {
            const double x = v.get<double>();
            if (std::isfinite(x) && x == std::floor(x) && std::abs(x) < 9e15) return static_cast<std::int64_t>(x);
        }
        fail(what + " must be an integer");
    }

private:
    const Json* j_;
    std::string name_;
    std::set<std::string> used_;
};

std::optional<Experiment> experiment_from(const std::string& s) {
    if (s == "kernel") return Experiment::kernel;
    if (s == "tc") return Experiment::tc;
    if (s == "dispersion") return Experiment::dispersion;
    if (s == "memory") return Experiment::memory;
    if (s == "sweep") return Experiment::sweep;
    return std::nullopt;
}

void parse_kernel(Section s, KernelSection& k) {
    k.spec.mu2 = s.number("mu2", k.spec.mu2);
    k.spec.dim = static_cast<int>(s.integer("dim", k.spec.dim));
    k.spec.g = s.number("g", k.spec.g);
    k.tol = s.number("tol", k.tol);
    k.r_min = s.number("r_min", k.r_min);
    k.r_max = s.number("r_max", k.r_max);
    k.samples = static_cast<int>(s.integer("samples", k.samples));
    s.finish();
    if (k.spec.mu2 < 0.0) fail("kernel.mu2 must be >= 0");
    if (k.spec.dim < 1 || k.spec.dim > 3) fail("kernel.dim must be 1, 2 or 3");
    if (k.spec.g == 0.0) fail("kernel.g must be nonzero");
    if (!(k.tol > 0.0 && k.tol <= 1e-3)) fail("kernel.tol must lie in (0, 1e-3]");
    if (!(k.r_min > 0.0 && k.r_max >= k.r_min)) fail("kernel needs 0 < r_min <= r_max");
    if (k.samples < 1 || k.samples > 100000) fail("kernel.samples must lie in [1, 100000]");
}

void parse_lattice(Section s, LatticeSection& l, bool sizes_scanned) {
    l.dim = static_cast<int>(s.integer("dim", l.dim));
    if (l.dim < 1 || l.dim > 3) fail("lattice.dim must be 1, 2 or 3");
    if (const Json* v = s.raw("lengths")) {
        if (sizes_scanned) fail("lattice.lengths is not used here; sizes come from mc.sizes");
        if (!v->is_array()) fail("lattice.lengths must be an array");
        for (const Json& x : *v) l.lengths.push_back(static_cast<int>(Section::as_integer(x, "lattice.lengths")));
        if (static_cast<int>(l.lengths.size()) != l.dim) fail("lattice.lengths needs one entry per axis");
        for (int L : l.lengths)
            if (L < 2 || L > 4096) fail("lattice.lengths entries must lie in [2, 4096]");
    } else if (!sizes_scanned) {
        fail("lattice.lengths is required");
    }
    l.spacing = s.number("spacing", l.spacing);
    if (!(l.spacing > 0.0)) fail("lattice.spacing must be > 0");
    l.periodic.assign(static_cast<std::size_t>(l.dim), true);
    if (const Json* v = s.raw("periodic")) {
        if (v->is_boolean()) {
            l.periodic.assign(static_cast<std::size_t>(l.dim), v->get<bool>());
        } else if (v->is_array() && static_cast<int>(v->size()) == l.dim) {
            for (std::size_t a = 0; a < v->size(); ++a) {
                if (!(*v)[a].is_boolean()) fail("lattice.periodic entries must be booleans");
                l.periodic[a] = (*v)[a].get<bool>();
            }
        } else {
            fail("lattice.periodic must be a boolean or one boolean per axis");
        }
    }
    s.finish();
}

void parse_coupling(Section s, CouplingSection& c) {
    c.model = s.text("model", c.model);
    if (c.model != "nearest" && c.model != "yukawa") fail("coupling.model must be \"nearest\" or \"yukawa\"");
    c.sign = static_cast<int>(s.integer("sign", c.sign));
    if (c.sign != 1 && c.sign != -1) fail("coupling.sign must be +1 or -1");
    if (s.has("bond_J")) {
        if (c.model != "nearest") fail("coupling.bond_J applies to the nearest model only");
        c.bond_J = s.number("bond_J", c.bond_J);
        if (!(c.bond_J > 0.0)) fail("coupling.bond_J must be > 0");
    }
    if (s.has("cutoff")) {
        if (c.model != "yukawa") fail("coupling.cutoff applies to the yukawa model only");
        c.cutoff = s.number("cutoff", 0.0);
        if (!(*c.cutoff > 0.0)) fail("coupling.cutoff must be > 0");
    }
    s.finish();
}

Proposal proposal_from(const std::string& s) {
    if (s == "uniform-sphere") return Proposal::uniform_sphere;
    if (s == "small-cone") return Proposal::small_cone;
    fail("mc.proposal must be \"uniform-sphere\" or \"small-cone\"");
}

void parse_mc(Section s, McSection& m, bool grid) {
    if (grid) {
        if (!s.has("temperatures")) fail("mc.temperatures is required");
        for (const Json& x : s.array("temperatures")) {
            if (!x.is_number()) fail("mc.temperatures entries must be numbers");
            m.temperatures.push_back(x.get<double>());
        }
        if (m.temperatures.empty()) fail("mc.temperatures is empty");
        for (double T : m.temperatures)
            if (!(std::isfinite(T) && T > 0.0)) fail("mc.temperatures entries must be > 0");
        for (std::size_t i = 1; i < m.temperatures.size(); ++i)
            if (!(m.temperatures[i] > m.temperatures[i - 1])) fail("mc.temperatures must be strictly ascending");
        if (!s.has("sizes")) fail("mc.sizes is required");
        for (const Json& x : s.array("sizes")) m.sizes.push_back(static_cast<int>(Section::as_integer(x, "mc.sizes")));
        if (m.sizes.empty()) fail("mc.sizes is empty");
        for (std::size_t i = 0; i < m.sizes.size(); ++i) {
            if (m.sizes[i] < 2 || m.sizes[i] > 4096) fail("mc.sizes entries must lie in [2, 4096]");
            if (i > 0 && !(m.sizes[i] > m.sizes[i - 1])) fail("mc.sizes must be strictly ascending");
        }
    }
    m.sweeps = s.count("sweeps", m.sweeps);
    if (s.has("burn_in")) m.burn_in = s.count("burn_in", 0);
    m.thin = s.count("thin", m.thin);
    m.proposal = proposal_from(s.text("proposal", std::string(to_string(m.proposal))));
    m.cone_angle = s.number("cone_angle", m.cone_angle);
    m.checkpoint_every = s.count("checkpoint_every", m.checkpoint_every);
    m.save_series = s.boolean("save_series", m.save_series);
    s.finish();
    if (m.sweeps < 1) fail("mc.sweeps must be >= 1");
    if (m.thin < 1) fail("mc.thin must be >= 1");
    if (m.burn_in && *m.burn_in >= m.sweeps) fail("mc.burn_in must be < mc.sweeps");
    if (!(m.cone_angle > 0.0 && m.cone_angle <= std::numbers::pi)) fail("mc.cone_angle must lie in (0, pi]");
    if (grid && (m.sweeps - m.burn_in.value_or(m.sweeps / 5)) / m.thin < 100)
        fail("mc settings give fewer than 100 measured records per chain");
}

Order order_from(const std::string& s) {
    if (s == "FM") return Order::FM;
    if (s == "AFM") return Order::AFM;
    fail("dispersion.orders entries must be \"FM\" or \"AFM\"");
}

void parse_dispersion(Section s, DispersionSection& d, int dim, double spacing) {
    d.path = s.text("path", d.path);
    d.points_per_segment = static_cast<int>(s.integer("points_per_segment", d.points_per_segment));
    if (s.has("orders")) {
        d.orders.clear();
        for (const Json& x : s.array("orders")) {
            if (!x.is_string()) fail("dispersion.orders entries must be strings");
            d.orders.push_back(order_from(x.get<std::string>()));
        }
        if (d.orders.empty()) fail("dispersion.orders is empty");
        if (d.orders.size() == 2 && d.orders[0] == d.orders[1]) fail("dispersion.orders has a duplicate");
        if (d.orders.size() > 2) fail("dispersion.orders has a duplicate");
    }
    d.S = s.number("S", d.S);
    if (s.has("smallk_direction")) {
        const Json& v = s.array("smallk_direction");
        if (v.size() != 3) fail("dispersion.smallk_direction needs three components");
        double c[3];
        for (int a = 0; a < 3; ++a) {
            if (!v[a].is_number()) fail("dispersion.smallk_direction entries must be numbers");
            c[a] = v[a].get<double>();
        }
        d.smallk_direction = {c[0], c[1], c[2]};
    }
    d.smallk_points = static_cast<int>(s.integer("smallk_points", d.smallk_points));
    s.finish();
    if (!(d.S > 0.0)) fail("dispersion.S must be > 0");
    if (d.points_per_segment < 1 || d.points_per_segment > 100000)
        fail("dispersion.points_per_segment must lie in [1, 100000]");
    if (d.smallk_points < 5 || d.smallk_points > 10000) fail("dispersion.smallk_points must lie in [5, 10000]");
    if (norm(d.smallk_direction) == 0.0) fail("dispersion.smallk_direction must be nonzero");
    for (int a = dim; a < 3; ++a)
        if (d.smallk_direction[a] != 0.0) fail("dispersion.smallk_direction has components beyond lattice.dim");
    try {
        (void)parse_k_path(d.path, dim, spacing, d.points_per_segment);
    } catch (const Error& e) {
        fail(std::string("dispersion.path: ") + e.what());
    }
}

void parse_dynamics(Section s, DynamicsSection& d, std::size_t sites) {
    d.alpha = s.number("alpha", d.alpha);
    d.dt = s.number("dt", d.dt);
    d.steps = s.count("steps", d.steps);
    d.tilt_angle = s.number("tilt_angle", d.tilt_angle);
    d.T_store = s.number("T_store", d.T_store);
    d.store_sweeps = s.count("store_sweeps", d.store_sweeps);
    d.relax_alpha = s.number("relax_alpha", d.relax_alpha);
    d.relax_steps = s.count("relax_steps", d.relax_steps);
    if (s.has("pulse_sites")) {
        d.pulse_sites.clear();
        for (const Json& x : s.array("pulse_sites")) {
            const auto v = Section::as_integer(x, "dynamics.pulse_sites");
            if (v < 0 || static_cast<std::size_t>(v) >= sites) fail("dynamics.pulse_sites entry out of range");
            d.pulse_sites.push_back(static_cast<std::size_t>(v));
        }
    }
    d.repeats = static_cast<int>(s.integer("repeats", d.repeats));
    s.finish();
    if (d.alpha < 0.0) fail("dynamics.alpha must be >= 0");
    if (!(d.dt > 0.0)) fail("dynamics.dt must be > 0");
    if (d.steps < 100) fail("dynamics.steps must be >= 100");
    if (!(d.tilt_angle > 0.0 && d.tilt_angle <= 0.5 * std::numbers::pi))
        fail("dynamics.tilt_angle must lie in (0, pi/2]");
    if (!(d.T_store > 0.0)) fail("dynamics.T_store must be > 0");
    if (d.store_sweeps < 5) fail("dynamics.store_sweeps must be >= 5");
    if (d.relax_alpha < 0.0) fail("dynamics.relax_alpha must be >= 0");
    if (d.relax_steps > 0 && d.relax_alpha == 0.0) fail("dynamics.relax_alpha must be > 0 when relaxing");
    if (d.pulse_sites.empty()) fail("dynamics.pulse_sites is empty");
    if (std::set<std::size_t>(d.pulse_sites.begin(), d.pulse_sites.end()).size() != d.pulse_sites.size())
        fail("dynamics.pulse_sites has duplicates");
    if (d.repeats < 1 || d.repeats > 1000) fail("dynamics.repeats must lie in [1, 1000]");
}

Json kernel_json(const KernelSection& k) {
    return Json{{"mu2", k.spec.mu2}, {"dim", k.spec.dim}, {"g", k.spec.g}, {"tol", k.tol},
                {"r_min", k.r_min},  {"r_max", k.r_max}, {"samples", k.samples}};
}

Json lattice_json(const LatticeSection& l) {
    Json j{{"dim", l.dim}};
    if (!l.lengths.empty()) j["lengths"] = l.lengths;
    j["spacing"] = l.spacing;
    j["periodic"] = l.periodic;
    return j;
}

Json coupling_json(const CouplingSection& c) {
    Json j{{"model", c.model}, {"sign", c.sign}};
    if (c.model == "nearest") j["bond_J"] = c.bond_J;
    if (c.cutoff) j["cutoff"] = *c.cutoff;
    return j;
}

Json mc_json(const McSection& m, bool grid) {
    Json j;
    if (grid) {
        j["temperatures"] = m.temperatures;
        j["sizes"] = m.sizes;
    }
    j["sweeps"] = m.sweeps;
    j["burn_in"] = m.burn_in.value_or(m.sweeps / 5);
    j["thin"] = m.thin;
    j["proposal"] = std::string(to_string(m.proposal));
    j["cone_angle"] = m.cone_angle;
    return j;
}

} // namespace

std::string to_string(Experiment e) {
    switch (e) {
    case Experiment::kernel: return "kernel";
    case Experiment::tc: return "tc";
    case Experiment::dispersion: return "dispersion";
    case Experiment::memory: return "memory";
    case Experiment::sweep: return "sweep";
    }
    return "?";
}

Lattice LatticeSection::build(const std::vector<int>& lengths_override) const {
    return build_lattice(dim, lengths_override.empty() ? lengths : lengths_override, spacing, periodic);
}

CouplingTable CouplingSection::build(const Lattice& lattice, const KernelSpec& kernel, int sign_override) const {
    const int s = sign_override ? sign_override : sign;
    if (model == "nearest") return nearest_neighbor_table(lattice, bond_J, s);
    return build_coupling_table(lattice, kernel, cutoff.value_or(default_cutoff(kernel)), s);
}

ChainParams McSection::params(double T, std::uint64_t seed, std::uint64_t stream) const {
    ChainParams p = ChainParams::make(T, sweeps, seed, stream);
    if (burn_in) p.burn_in = *burn_in;
    p.thin = thin;
    p.proposal = proposal;
    p.cone_angle = cone_angle;
    return p;
}

RunConfig parse_config(const Json& doc, Experiment experiment) {
    if (!doc.is_object()) fail("top level must be a JSON object");
    RunConfig cfg;
    cfg.experiment = experiment;
    Section top(&doc, "");
    if (top.has("experiment")) {
        const auto e = experiment_from(top.text("experiment", ""));
        if (!e) fail("unknown experiment '" + doc.at("experiment").get<std::string>() + "'");
        if (*e != experiment)
            fail("config is for experiment '" + to_string(*e) + "' but '" + to_string(experiment) + "' was run");
    }
    cfg.seed = top.count("seed", cfg.seed);
    if (top.has("workers")) {
        const auto w = top.count("workers", 1);
        if (w < 1 || w > 1024) fail("workers must lie in [1, 1024]");
        cfg.workers = static_cast<std::size_t>(w);
    }
    cfg.output_dir = top.text("output_dir", cfg.output_dir);
    if (cfg.output_dir.empty()) fail("output_dir is empty");

    const bool grid = experiment == Experiment::tc || experiment == Experiment::sweep;
    auto section = [&](const char* name) { return Section(top.raw(name), name); };
    Section kernel = section("kernel");
    Section lattice = section("lattice");
    Section coupling = section("coupling");
    Section mc = section("mc");
    Section dispersion = section("dispersion");
    Section dynamics = section("dynamics");
    top.finish();

    auto forbid = [&](const Section& s, const char* name) {
        if (s.present()) fail("section '" + std::string(name) + "' is not used by '" + to_string(experiment) + "'");
    };

    parse_kernel(kernel, cfg.kernel);
    if (experiment == Experiment::kernel) {
        forbid(lattice, "lattice");
        forbid(coupling, "coupling");
        forbid(mc, "mc");
        forbid(dispersion, "dispersion");
        forbid(dynamics, "dynamics");
        return cfg;
    }

    if (!lattice.present()) fail("section 'lattice' is required");
    parse_lattice(lattice, cfg.lattice, grid);
    parse_coupling(coupling, cfg.coupling);
    if (cfg.coupling.model == "nearest") forbid(kernel, "kernel");

    switch (experiment) {
    case Experiment::tc:
    case Experiment::sweep:
        if (!mc.present()) fail("section 'mc' is required");
        parse_mc(mc, cfg.mc, true);
        if (experiment == Experiment::tc) {
            if (cfg.mc.sizes.size() < 2) fail("tc needs at least 2 entries in mc.sizes");
            if (cfg.mc.temperatures.size() < 4) fail("tc needs at least 4 entries in mc.temperatures");
        }
        forbid(dispersion, "dispersion");
        forbid(dynamics, "dynamics");
        break;
    case Experiment::dispersion:
        parse_dispersion(dispersion, cfg.dispersion, cfg.lattice.dim, cfg.lattice.spacing);
        forbid(mc, "mc");
        forbid(dynamics, "dynamics");
        if (coupling.has("sign")) fail("coupling.sign is not used by 'dispersion'; each order fixes its own sign");
        break;
    case Experiment::memory: {
        std::size_t sites = 1;
        for (int L : cfg.lattice.lengths) sites *= static_cast<std::size_t>(L);
        parse_dynamics(dynamics, cfg.dynamics, sites);
        forbid(mc, "mc");
        forbid(dispersion, "dispersion");
        if (cfg.coupling.sign != 1) fail("memory needs coupling.sign = +1");
        break;
    }
    case Experiment::kernel: break;
    }
    return cfg;
}

Json RunConfig::canonical() const {
    Json j;
    j["experiment"] = to_string(experiment);
    j["seed"] = seed;
    const bool yukawa = coupling.model == "yukawa";
    if (experiment == Experiment::kernel || yukawa) j["kernel"] = kernel_json(kernel);
    if (experiment == Experiment::kernel) return j;
    j["lattice"] = lattice_json(lattice);
    Json c = coupling_json(coupling);
    if (experiment == Experiment::dispersion) c.erase("sign");
    j["coupling"] = c;
    switch (experiment) {
    case Experiment::tc:
    case Experiment::sweep: {
        Json m = mc_json(mc, true);
        if (experiment == Experiment::tc) {
            m["checkpoint_every"] = mc.checkpoint_every;
            m["save_series"] = mc.save_series;
        }
        j["mc"] = m;
        break;
    }
    case Experiment::dispersion: {
        std::vector<std::string> orders;
        for (Order o : dispersion.orders) orders.emplace_back(to_string(o));
        j["dispersion"] = Json{{"path", dispersion.path},
                               {"points_per_segment", dispersion.points_per_segment},
                               {"orders", orders},
                               {"S", dispersion.S},
                               {"smallk_direction",
                                {dispersion.smallk_direction.x, dispersion.smallk_direction.y,
                                 dispersion.smallk_direction.z}},
                               {"smallk_points", dispersion.smallk_points}};
        break;
    }
    case Experiment::memory:
        j["dynamics"] = Json{{"alpha", dynamics.alpha},
                             {"dt", dynamics.dt},
                             {"steps", dynamics.steps},
                             {"tilt_angle", dynamics.tilt_angle},
                             {"T_store", dynamics.T_store},
                             {"store_sweeps", dynamics.store_sweeps},
                             {"relax_alpha", dynamics.relax_alpha},
                             {"relax_steps", dynamics.relax_steps},
                             {"pulse_sites", dynamics.pulse_sites},
                             {"repeats", dynamics.repeats}};
        break;
    case Experiment::kernel: break;
    }
    return j;
}

std::string RunConfig::digest() const {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : canonical().dump()) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace qbdspin::cli
