#pragma once

// JSON and CSV persistence. Doubles are written in shortest round-trip form,
// so write -> read -> write reproduces the same bytes.

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "qbdspin/coupling.hpp"
#include "qbdspin/error.hpp"
#include "qbdspin/lattice.hpp"
#include "qbdspin/montecarlo.hpp"

namespace qbdspin::io {

using Json = nlohmann::ordered_json;

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw Error(ErrorKind::validation, "cannot parse number '" + std::string(s) + "'");
    return v;
}

namespace detail {

inline const Json& at(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key))
        throw Error(ErrorKind::validation, std::string("missing field '") + key + "'");
    return j.at(key);
}

template <class T>
T get(const Json& j, const char* key) {
    try {
        return at(j, key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::validation, std::string("bad field '") + key + "': " + e.what());
    }
}

inline void check_format(const Json& j, std::string_view format) {
    if (get<std::string>(j, "format") != format || get<int>(j, "version") != 1)
        throw Error(ErrorKind::validation, "unsupported document, expected " + std::string(format) + " v1");
}

inline void put_geometry(Json& j, const Lattice& lattice) {
    j["dim"] = lattice.dim();
    j["lengths"] = lattice.lengths();
    j["spacing"] = lattice.spacing();
    Json per = Json::array();
    for (bool p : lattice.periodic()) per.push_back(p);
    j["periodic"] = per;
}

inline Lattice get_geometry(const Json& j) {
    return Lattice(get<int>(j, "dim"), get<std::vector<int>>(j, "lengths"), get<double>(j, "spacing"),
                   get<std::vector<bool>>(j, "periodic"));
}

} // namespace detail

// --- coupling table ---------------------------------------------------------

inline Json to_json(const CouplingTable& t) {
    Json j;
    j["format"] = "qbdspin.coupling_table";
    j["version"] = 1;
    detail::put_geometry(j, t.lattice());
    const CouplingSource& src = t.source();
    if (src.kind == CouplingSource::Kind::yukawa) {
        j["kernel"] = "yukawa";
        j["kernel_dim"] = src.spec.dim;
        j["mu2"] = src.spec.mu2;
        j["g"] = src.spec.g;
    } else {
        j["kernel"] = "uniform";
        j["pair_J"] = src.pair_J;
    }
    j["sign"] = t.sign();
    j["cutoff"] = t.cutoff();
    j["tail_bound"] = t.tail_bound();
    Json pairs = Json::array();
    for (const Pair& p : t.pairs()) pairs.push_back(Json::array({p.i, p.j, p.J}));
    j["pairs"] = std::move(pairs);
    return j;
}

inline CouplingTable coupling_table_from_json(const Json& j) {
    detail::check_format(j, "qbdspin.coupling_table");
    CouplingSource src;
    const auto kernel = detail::get<std::string>(j, "kernel");
    if (kernel == "yukawa") {
        src.kind = CouplingSource::Kind::yukawa;
        src.spec = {detail::get<double>(j, "mu2"), detail::get<int>(j, "kernel_dim"), detail::get<double>(j, "g")};
        src.spec.validate();
    } else if (kernel == "uniform") {
        src.kind = CouplingSource::Kind::uniform;
        src.pair_J = detail::get<double>(j, "pair_J");
    } else {
        throw Error(ErrorKind::validation, "unknown kernel '" + kernel + "'");
    }
    std::vector<Pair> pairs;
    for (const Json& p : detail::at(j, "pairs")) {
        if (!p.is_array() || p.size() != 3) throw Error(ErrorKind::validation, "pairs entries must be [i, j, J]");
        pairs.push_back({p[0].get<std::uint32_t>(), p[1].get<std::uint32_t>(), p[2].get<double>()});
    }
    return CouplingTable(detail::get_geometry(j), src, detail::get<int>(j, "sign"), detail::get<double>(j, "cutoff"),
                         detail::get<double>(j, "tail_bound"), std::move(pairs));
}

// --- spin configuration -----------------------------------------------------

inline Json to_json(const SpinConfig& c, const Lattice& lattice) {
    Json j;
    j["format"] = "qbdspin.spin_config";
    j["version"] = 1;
    detail::put_geometry(j, lattice);
    Json spins = Json::array();
    for (const Vec3& s : c.spins()) spins.push_back(Json::array({s.x, s.y, s.z}));
    j["spins"] = std::move(spins);
    return j;
}

inline SpinConfig spin_config_from_json(const Json& j, Lattice* lattice_out = nullptr) {
    detail::check_format(j, "qbdspin.spin_config");
    Lattice lattice = detail::get_geometry(j);
    std::vector<Vec3> spins;
    for (const Json& s : detail::at(j, "spins")) {
        if (!s.is_array() || s.size() != 3) throw Error(ErrorKind::validation, "spins entries must be [x, y, z]");
        spins.push_back({s[0].get<double>(), s[1].get<double>(), s[2].get<double>()});
    }
    if (spins.size() != lattice.size()) throw Error(ErrorKind::validation, "spin count does not match lattice");
    if (lattice_out) *lattice_out = lattice;
    return SpinConfig(std::move(spins));
}

// --- chain parameters, metadata and checkpoints -----------------------------

inline Json to_json(const ChainParams& p) {
    Json j;
    j["T"] = p.T;
    j["sweeps"] = p.sweeps;
    j["burn_in"] = p.burn_in;
    j["thin"] = p.thin;
    j["seed"] = p.seed;
    j["stream"] = p.stream;
    j["proposal"] = std::string(to_string(p.proposal));
    j["cone_angle"] = p.cone_angle;
    return j;
}

inline ChainParams chain_params_from_json(const Json& j) {
    ChainParams p;
    p.T = detail::get<double>(j, "T");
    p.sweeps = detail::get<std::uint64_t>(j, "sweeps");
    p.burn_in = detail::get<std::uint64_t>(j, "burn_in");
    p.thin = detail::get<std::uint64_t>(j, "thin");
    p.seed = detail::get<std::uint64_t>(j, "seed");
    p.stream = detail::get<std::uint64_t>(j, "stream");
    const auto prop = detail::get<std::string>(j, "proposal");
    if (prop == "uniform-sphere") p.proposal = Proposal::uniform_sphere;
    else if (prop == "small-cone") p.proposal = Proposal::small_cone;
    else throw Error(ErrorKind::validation, "unknown proposal '" + prop + "'");
    p.cone_angle = detail::get<double>(j, "cone_angle");
    p.validate();
    return p;
}

inline Json to_json(const SeriesMeta& m, std::size_t records) {
    Json j;
    j["format"] = "qbdspin.series_meta";
    j["version"] = 1;
    j["params"] = to_json(m.params);
    j["lattice_digest"] = m.lattice_digest;
    j["sites"] = m.sites;
    j["sign"] = m.sign;
    j["acceptance"] = m.acceptance;
    j["final_cone_angle"] = m.final_cone_angle;
    j["records"] = records;
    return j;
}

inline SeriesMeta series_meta_from_json(const Json& j) {
    detail::check_format(j, "qbdspin.series_meta");
    SeriesMeta m;
    m.params = chain_params_from_json(detail::at(j, "params"));
    m.lattice_digest = detail::get<std::string>(j, "lattice_digest");
    m.sites = detail::get<std::size_t>(j, "sites");
    m.sign = detail::get<int>(j, "sign");
    m.acceptance = detail::get<double>(j, "acceptance");
    m.final_cone_angle = detail::get<double>(j, "final_cone_angle");
    return m;
}

inline Json to_json(const ChainCheckpoint& ck, const Lattice& lattice, std::size_t records) {
    Json j;
    j["format"] = "qbdspin.checkpoint";
    j["version"] = 1;
    j["params"] = to_json(ck.params);
    j["sweeps_done"] = ck.sweeps_done;
    j["accepted"] = ck.accepted;
    j["proposed"] = ck.proposed;
    j["cone_angle"] = ck.cone_angle;
    j["tune_accepted"] = ck.tune_accepted;
    j["records"] = records;
    j["rng"] = ck.rng_state;
    j["config"] = to_json(ck.config, lattice);
    return j;
}

inline ChainCheckpoint checkpoint_from_json(const Json& j, std::size_t* records = nullptr) {
    detail::check_format(j, "qbdspin.checkpoint");
    ChainCheckpoint ck;
    ck.params = chain_params_from_json(detail::at(j, "params"));
    ck.sweeps_done = detail::get<std::uint64_t>(j, "sweeps_done");
    ck.accepted = detail::get<std::uint64_t>(j, "accepted");
    ck.proposed = detail::get<std::uint64_t>(j, "proposed");
    ck.cone_angle = detail::get<double>(j, "cone_angle");
    ck.tune_accepted = detail::get<std::uint64_t>(j, "tune_accepted");
    ck.rng_state = detail::get<std::string>(j, "rng");
    ck.config = spin_config_from_json(detail::at(j, "config"));
    if (records) *records = detail::get<std::size_t>(j, "records");
    return ck;
}

// --- series CSV -------------------------------------------------------------

inline constexpr std::string_view series_header = "sweep,energy,mx,my,mz,sx,sy,sz";

inline void write_record(std::ostream& os, const Record& r) {
    os << r.sweep << ',' << format_double(r.energy) << ',' << format_double(r.m.x) << ',' << format_double(r.m.y)
       << ',' << format_double(r.m.z) << ',' << format_double(r.staggered.x) << ','
       << format_double(r.staggered.y) << ',' << format_double(r.staggered.z) << '\n';
}

inline void write_series_csv(std::ostream& os, const std::vector<Record>& records) {
    os << series_header << '\n';
    for (const Record& r : records) write_record(os, r);
}

/// Reads records, skipping '#' comment lines; stops after `limit` records.
inline std::vector<Record> read_series_csv(std::istream& is, std::size_t limit = static_cast<std::size_t>(-1)) {
    std::vector<Record> out;
    std::string line;
    bool header = false;
    while (out.size() < limit && std::getline(is, line)) {
        if (line.empty() || line.front() == '#') continue;
        if (!header) {
            if (line != series_header) throw Error(ErrorKind::validation, "series CSV: unexpected header");
            header = true;
            continue;
        }
        std::vector<std::string_view> cells;
        std::string_view rest(line);
        for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos; rest.remove_prefix(pos + 1))
            cells.push_back(rest.substr(0, pos));
        cells.push_back(rest);
        if (cells.size() != 8) throw Error(ErrorKind::validation, "series CSV: expected 8 columns");
        Record r;
        const auto [end, ec] = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), r.sweep);
        if (ec != std::errc() || end != cells[0].data() + cells[0].size())
            throw Error(ErrorKind::validation, "series CSV: bad sweep index");
        r.energy = parse_double(cells[1]);
        r.m = {parse_double(cells[2]), parse_double(cells[3]), parse_double(cells[4])};
        r.staggered = {parse_double(cells[5]), parse_double(cells[6]), parse_double(cells[7])};
        out.push_back(r);
    }
    return out;
}

// --- files ------------------------------------------------------------------

inline Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::validation, "cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::validation, path + ": " + e.what());
    }
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::validation, "cannot write " + path);
    out << text;
}

inline void write_json_file(const std::string& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

} // namespace qbdspin::io
