#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace qbdspin::cli {

namespace fs = std::filesystem;
using io::format_double;

std::atomic<bool>& stop_requested() {
    static std::atomic<bool> flag{false};
    return flag;
}

namespace {

Json provenance(const RunConfig& cfg) {
    return Json{{"tool", "qbdspin"},
                {"version", QBDSPIN_VERSION},
                {"experiment", to_string(cfg.experiment)},
                {"config_digest", cfg.digest()},
                {"seed", cfg.seed}};
}

std::string provenance_line(const RunConfig& cfg) {
    return "# qbdspin " QBDSPIN_VERSION " experiment=" + to_string(cfg.experiment) + " config=" + cfg.digest() +
           " seed=" + std::to_string(cfg.seed) + "\n";
}

fs::path prepare_output(const RunConfig& cfg) {
    const fs::path dir(cfg.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::validation, "cannot create output directory " + dir.string() + ": " + ec.message());
    Json c = cfg.canonical();
    c["provenance"] = provenance(cfg);
    io::write_json_file((dir / "config.json").string(), c);
    return dir;
}

Json report(const RunConfig& cfg) { return Json{{"provenance", provenance(cfg)}}; }

void write_json(const fs::path& p, const Json& j) { io::write_json_file(p.string(), j); }

// Write-then-rename so an interrupted run never leaves a torn file.
void write_atomic(const fs::path& p, const std::string& text) {
    const fs::path tmp = p.string() + ".tmp";
    io::write_text_file(tmp.string(), text);
    fs::rename(tmp, p);
}

Json vec_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

Lattice cube(const RunConfig& cfg, int L) {
    return cfg.lattice.build(std::vector<int>(static_cast<std::size_t>(cfg.lattice.dim), L));
}

std::string trajectory_csv(const RunConfig& cfg, const Trajectory& tr) {
    std::ostringstream os;
    os << provenance_line(cfg) << "t,energy,excess,mx,my,mz\n";
    for (const Frame& f : tr.frames)
        os << format_double(f.t) << ',' << format_double(f.energy) << ',' << format_double(f.excess) << ','
           << format_double(f.m.x) << ',' << format_double(f.m.y) << ',' << format_double(f.m.z) << '\n';
    return os.str();
}

} // namespace

// --- kernel -----------------------------------------------------------------

int cmd_kernel(const RunConfig& cfg, const RunOptions& opt) {
    const KernelSection& k = cfg.kernel;
    (void)kernel_closed_form(k.r_min, k.spec); // surfaces divergent setups before any output

    std::vector<double> rs(static_cast<std::size_t>(k.samples));
    for (int i = 0; i < k.samples; ++i) {
        const double f = k.samples == 1 ? 0.0 : static_cast<double>(i) / (k.samples - 1);
        rs[i] = k.r_min * std::pow(k.r_max / k.r_min, f);
    }
    std::vector<double> closed(rs.size()), dev(rs.size());
    std::vector<KernelValue> quad(rs.size());
    parallel_for(rs.size(), opt.workers, [&](std::size_t i) {
        closed[i] = kernel_closed_form(rs[i], k.spec);
        quad[i] = kernel_quadrature(rs[i], k.spec, k.tol);
        dev[i] = std::abs(quad[i].value - closed[i]) / std::abs(closed[i]);
    });
    double worst = 0.0;
    for (double d : dev) worst = std::max(worst, d);

    const fs::path dir = prepare_output(cfg);
    std::ostringstream csv;
    csv << provenance_line(cfg) << "r,closed_form,quadrature,error_bound,rel_deviation\n";
    for (std::size_t i = 0; i < rs.size(); ++i)
        csv << format_double(rs[i]) << ',' << format_double(closed[i]) << ',' << format_double(quad[i].value) << ','
            << format_double(quad[i].abs_error_bound) << ',' << format_double(dev[i]) << '\n';
    io::write_text_file((dir / "kernel.csv").string(), csv.str());

    Json out = report(cfg);
    out["kernel"] = Json{{"mu2", k.spec.mu2}, {"dim", k.spec.dim}, {"g", k.spec.g}};
    out["samples"] = k.samples;
    out["max_rel_deviation"] = worst;
    out["tol"] = k.tol;
    out["pass"] = worst <= k.tol;
    write_json(dir / "kernel.json", out);
    if (worst > k.tol)
        throw Error(ErrorKind::accuracy, "kernel: max relative deviation " + format_double(worst) + " exceeds tol");
    return 0;
}

// --- tc ---------------------------------------------------------------------

namespace {

struct ChainFiles {
    fs::path json, csv;
};

std::atomic<std::uint64_t>& checkpoint_writes() {
    static std::atomic<std::uint64_t> n{0};
    return n;
}

void save_checkpoint(const ChainFiles& f, const ChainRunner& runner, const Lattice& lattice,
                     std::size_t& records_on_disk, const RunOptions& opt) {
    const auto& recs = runner.records();
    {
        std::ofstream out(f.csv, std::ios::binary | std::ios::app);
        if (!out) throw Error(ErrorKind::validation, "cannot write " + f.csv.string());
        if (records_on_disk == 0 && fs::file_size(f.csv) == 0) out << io::series_header << '\n';
        for (std::size_t i = records_on_disk; i < recs.size(); ++i) io::write_record(out, recs[i]);
    }
    records_on_disk = recs.size();
    write_atomic(f.json, io::to_json(runner.checkpoint(), lattice, recs.size()).dump(2) + "\n");
    if (opt.halt_after && checkpoint_writes().fetch_add(1) + 1 >= opt.halt_after) stop_requested() = true;
}

ObservableSeries run_checkpointed(const CouplingTable& table, const ChainParams& p, const ChainFiles& files,
                                  const McSection& mc, const RunOptions& opt) {
    const Lattice& lattice = table.lattice();
    std::optional<ChainRunner> runner;
    std::size_t on_disk = 0;
    if (opt.resume && fs::exists(files.json)) {
        std::size_t n = 0;
        const ChainCheckpoint ck = io::checkpoint_from_json(io::read_json_file(files.json.string()), &n);
        if (io::to_json(ck.params) != io::to_json(p))
            throw Error(ErrorKind::validation, "checkpoint " + files.json.string() + " belongs to a different run");
        std::ifstream in(files.csv);
        auto records = io::read_series_csv(in, n);
        if (records.size() != n)
            throw Error(ErrorKind::validation, "checkpoint " + files.csv.string() + " is missing records");
        runner.emplace(table, ck, records);
        // drop anything appended after the last completed checkpoint
        std::ostringstream os;
        io::write_series_csv(os, records);
        write_atomic(files.csv, os.str());
        on_disk = n;
    } else {
        runner.emplace(table, p);
        io::write_text_file(files.csv.string(), "");
    }
    while (!runner->finished()) {
        if (stop_requested()) throw Interrupted("interrupted; rerun with --resume to continue");
        runner->advance(mc.checkpoint_every);
        save_checkpoint(files, *runner, lattice, on_disk, opt);
    }
    return runner->series();
}

struct Grid {
    std::vector<CouplingTable> tables;
    std::vector<std::vector<ObservableSeries>> series; // [size][temperature]
};

Grid run_grid(const RunConfig& cfg, const RunOptions& opt, const fs::path* checkpoint_dir) {
    const McSection& mc = cfg.mc;
    const std::size_t nL = mc.sizes.size(), nT = mc.temperatures.size();
    Grid g;
    for (int L : mc.sizes) g.tables.push_back(cfg.coupling.build(cube(cfg, L), cfg.kernel.spec));
    g.series.assign(nL, std::vector<ObservableSeries>(nT));
    parallel_for(nL * nT, opt.workers, [&](std::size_t k) {
        const std::size_t l = k / nT, t = k % nT;
        const ChainParams p = mc.params(mc.temperatures[t], cfg.seed, static_cast<std::uint64_t>(k));
        if (checkpoint_dir) {
            const std::string stem = "chain_L" + std::to_string(mc.sizes[l]) + "_T" + std::to_string(t);
            const ChainFiles files{*checkpoint_dir / (stem + ".json"), *checkpoint_dir / (stem + ".csv")};
            g.series[l][t] = run_checkpointed(g.tables[l], p, files, mc, opt);
        } else {
            if (stop_requested()) throw Interrupted("interrupted");
            g.series[l][t] = run_chain(g.tables[l].lattice(), g.tables[l], p);
        }
    });
    return g;
}

void save_series(const RunConfig& cfg, const fs::path& dir, const Grid& g) {
    const fs::path sdir = dir / "series";
    fs::create_directories(sdir);
    for (std::size_t l = 0; l < g.series.size(); ++l)
        for (std::size_t t = 0; t < g.series[l].size(); ++t) {
            const ObservableSeries& s = g.series[l][t];
            const std::string stem = "L" + std::to_string(cfg.mc.sizes[l]) + "_T" + std::to_string(t);
            std::ostringstream os;
            os << provenance_line(cfg);
            io::write_series_csv(os, s.records);
            io::write_text_file((sdir / (stem + ".csv")).string(), os.str());
            Json meta = io::to_json(s.meta, s.records.size());
            meta["provenance"] = provenance(cfg);
            write_json(sdir / (stem + ".json"), meta);
        }
}

} // namespace

int cmd_tc(const RunConfig& cfg, const RunOptions& opt) {
    const McSection& mc = cfg.mc;
    check_grid_inputs(mc.sizes, mc.temperatures);
    const fs::path dir = prepare_output(cfg);
    const fs::path ckdir = dir / "checkpoints";
    if (mc.checkpoint_every > 0) fs::create_directories(ckdir);
    Grid g = run_grid(cfg, opt, mc.checkpoint_every > 0 ? &ckdir : nullptr);

    BinderGrid grid{mc.sizes, mc.temperatures, g.series};
    std::ostringstream csv;
    csv << provenance_line(cfg) << "T,L,U4,m_abs,m_abs_err,acceptance\n";
    for (std::size_t l = 0; l < mc.sizes.size(); ++l)
        for (std::size_t t = 0; t < mc.temperatures.size(); ++t) {
            const ObservableSeries& s = g.series[l][t];
            const auto m = s.order_magnitudes();
            const auto est = stats::mean_with_error(m);
            csv << format_double(mc.temperatures[t]) << ',' << mc.sizes[l] << ',' << format_double(grid.U4(l, t))
                << ',' << format_double(est.value) << ',' << format_double(est.error) << ','
                << format_double(s.meta.acceptance) << '\n';
        }
    io::write_text_file((dir / "binder.csv").string(), csv.str());
    if (mc.save_series) save_series(cfg, dir, g);

    Json out = report(cfg);
    out["sizes"] = mc.sizes;
    out["temperatures"] = mc.temperatures;
    int code = 0;
    try {
        const TcEstimate est = locate_crossing(grid, cfg.seed);
        out["T_B"] = est.T_B;
        out["uncertainty"] = est.uncertainty;
        Json pairs = Json::array();
        for (const PairCrossing& c : est.crossings)
            pairs.push_back(Json{{"L_small", c.L_small}, {"L_large", c.L_large}, {"T", c.T}});
        out["crossings"] = pairs;
        out["bootstrap_resamples"] = est.bootstrap_used;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::no_crossing) throw;
        out["T_B"] = nullptr;
        out["uncertainty"] = nullptr;
        out["error"] = Json{{"kind", to_string(e.kind())}, {"message", e.what()}};
        code = 3;
    }
    write_json(dir / "tc.json", out);
    if (mc.checkpoint_every > 0) fs::remove_all(ckdir);
    if (code) throw Error(ErrorKind::no_crossing, "no Binder crossing inside the temperature grid");
    return 0;
}

// --- sweep ------------------------------------------------------------------

int cmd_sweep(const RunConfig& cfg, const RunOptions& opt) {
    const McSection& mc = cfg.mc;
    Grid g = run_grid(cfg, opt, nullptr);
    const fs::path dir = prepare_output(cfg);

    std::ostringstream csv;
    csv << provenance_line(cfg)
        << "L,T,m_abs,m_abs_err,energy_per_site,energy_per_site_err,chi,C,U4,acceptance\n";
    Json rows = Json::array();
    for (std::size_t l = 0; l < mc.sizes.size(); ++l)
        for (std::size_t t = 0; t < mc.temperatures.size(); ++t) {
            const ObservableSeries& s = g.series[l][t];
            const double N = static_cast<double>(s.meta.sites);
            const auto m = stats::mean_with_error(s.order_magnitudes());
            auto e = s.energies();
            for (double& v : e) v /= N;
            const auto ep = stats::mean_with_error(e);
            const Thermodynamics th = susceptibility_and_heat(s, mc.temperatures[t], s.meta.sites);
            const double u4 = binder_cumulant(s);
            csv << mc.sizes[l] << ',' << format_double(mc.temperatures[t]) << ',' << format_double(m.value) << ','
                << format_double(m.error) << ',' << format_double(ep.value) << ',' << format_double(ep.error) << ','
                << format_double(th.chi) << ',' << format_double(th.C) << ',' << format_double(u4) << ','
                << format_double(s.meta.acceptance) << '\n';
            rows.push_back(Json{{"L", mc.sizes[l]},
                                {"T", mc.temperatures[t]},
                                {"m_abs", m.value},
                                {"m_abs_err", m.error},
                                {"energy_per_site", ep.value},
                                {"energy_per_site_err", ep.error},
                                {"chi", th.chi},
                                {"C", th.C},
                                {"U4", u4},
                                {"acceptance", s.meta.acceptance}});
        }
    io::write_text_file((dir / "sweep.csv").string(), csv.str());
    Json out = report(cfg);
    out["points"] = rows;
    write_json(dir / "sweep.json", out);
    return 0;
}

// --- dispersion -------------------------------------------------------------

int cmd_dispersion(const RunConfig& cfg, const RunOptions& opt) {
    const DispersionSection& d = cfg.dispersion;
    const Lattice lattice = cfg.lattice.build();
    const auto ks = parse_k_path(d.path, lattice.dim(), lattice.spacing(), d.points_per_segment);

    struct Branch {
        Order order;
        DispersionCurve curve;
        ExponentFit fit;
        double goldstone = 0.0;
    };
    std::vector<Branch> branches;
    for (Order order : d.orders) {
        const CouplingTable table = cfg.coupling.build(lattice, cfg.kernel.spec, order == Order::FM ? 1 : -1);
        Branch b{order, detail::make_curve(ks, order, d.S, lattice.spacing()), {}, 0.0};
        // k points are independent; evaluate them in fixed chunks
        constexpr std::size_t chunk = 64;
        const std::size_t nchunks = (ks.size() + chunk - 1) / chunk;
        std::vector<std::vector<double>> parts(nchunks);
        parallel_for(nchunks, opt.workers, [&](std::size_t c) {
            const std::vector<Vec3> sub(ks.begin() + c * chunk, ks.begin() + std::min(ks.size(), (c + 1) * chunk));
            parts[c] = dispersion(table, sub, order, d.S).omega;
        });
        for (const auto& p : parts) b.curve.omega.insert(b.curve.omega.end(), p.begin(), p.end());
        b.fit = smallk_exponent(
            dispersion(table, smallk_points(d.smallk_direction, lattice.spacing(), d.smallk_points), order, d.S));
        b.goldstone = std::abs(dispersion(table, {Vec3{}}, order, d.S).omega.front());
        branches.push_back(std::move(b));
    }

    const fs::path dir = prepare_output(cfg);
    Json out = report(cfg);
    out["path"] = d.path;
    Json res = Json::object();
    bool ok = true;
    for (const Branch& b : branches) {
        std::ostringstream csv;
        csv << provenance_line(cfg) << "s,kx,ky,kz,omega\n";
        for (std::size_t i = 0; i < b.curve.k_points.size(); ++i) {
            const Vec3& k = b.curve.k_points[i];
            csv << format_double(b.curve.path[i]) << ',' << format_double(k.x) << ',' << format_double(k.y) << ','
                << format_double(k.z) << ',' << format_double(b.curve.omega[i]) << '\n';
        }
        const std::string name(to_string(b.order));
        io::write_text_file((dir / ("dispersion_" + name + ".csv")).string(), csv.str());
        const bool gold = b.goldstone <= 1e-10;
        ok = ok && gold;
        res[name] = Json{{"smallk_exponent", b.fit.exponent},
                         {"fit_points", b.fit.points},
                         {"goldstone_omega", b.goldstone},
                         {"goldstone_ok", gold}};
    }
    out["branches"] = res;
    write_json(dir / "exponents.json", out);
    if (!ok) throw Error(ErrorKind::accuracy, "dispersion: Goldstone check failed, omega(0) > 1e-10");
    return 0;
}

// --- memory -----------------------------------------------------------------

int cmd_memory(const RunConfig& cfg, const RunOptions& opt) {
    const DynamicsSection& d = cfg.dynamics;
    const Lattice lattice = cfg.lattice.build();
    const CouplingTable table = cfg.coupling.build(lattice, cfg.kernel.spec);

    struct Run {
        MemoryRecord record;
        SpinConfig stored, pulsed;
        double relaxed_energy = 0.0;
        Trajectory trajectory;
        RecallResult recall;
        bool monotone = true;
        double drift = 0.0;
        std::optional<std::string> failure;
    };
    const std::size_t n = static_cast<std::size_t>(d.repeats);
    std::vector<Run> runs(n);
    parallel_for(n, opt.workers, [&](std::size_t r) {
        Run& run = runs[r];
        ChainParams store = ChainParams::make(d.T_store, d.store_sweeps, cfg.seed, r);
        store.proposal = Proposal::small_cone;
        auto [config, record] = store_memory(lattice, table, d.T_store, store);
        run.record = record;
        run.stored = config;
        SpinConfig relaxed = config;
        try {
            if (d.relax_steps > 0)
                relaxed = evolve_damped(config, table, d.relax_alpha, d.dt, d.relax_steps).final_config;
        } catch (const InstabilityError& e) {
            // keep the relaxation trajectory as the partial result
            run.trajectory = e.partial();
            run.failure = std::string("relaxation: ") + e.what();
            return;
        }
        run.relaxed_energy = total_energy(relaxed, table).total;
        run.pulsed = recall_pulse(relaxed, d.pulse_sites, d.tilt_angle);
        try {
            run.trajectory = evolve_damped(run.pulsed, table, d.alpha, d.dt, d.steps, run.relaxed_energy);
        } catch (const InstabilityError& e) {
            run.trajectory = e.partial();
            run.failure = e.what();
            return;
        }
        run.recall = measure_recall(run.trajectory, run.record);
        const auto smooth = smoothed_excess(run.trajectory);
        const double slack = 1e-12 * std::max(1.0, std::abs(run.relaxed_energy));
        for (std::size_t i = 1; i < smooth.size(); ++i)
            if (smooth[i] > smooth[i - 1] + slack) run.monotone = false;
        run.drift = relative_energy_drift(run.trajectory);
    });

    const fs::path dir = prepare_output(cfg);
    Json out = report(cfg);
    Json list = Json::array();
    double min_fid = 1.0;
    bool all_decayed = true;
    std::optional<std::string> failure;
    for (std::size_t r = 0; r < n; ++r) {
        const Run& run = runs[r];
        const std::string tag = "_r" + std::to_string(r);
        io::write_text_file((dir / ("trajectory" + tag + ".csv")).string(), trajectory_csv(cfg, run.trajectory));
        write_json(dir / ("config_stored" + tag + ".json"), io::to_json(run.stored, lattice));
        if (run.pulsed.size() > 0) write_json(dir / ("config_initial" + tag + ".json"), io::to_json(run.pulsed, lattice));
        write_json(dir / ("config_final" + tag + ".json"), io::to_json(run.trajectory.final_config, lattice));
        Json j{{"repeat", r},
               {"T_store", run.record.T_store},
               {"order_direction", vec_json(run.record.order_direction)},
               {"order_magnitude", run.record.order_magnitude},
               {"relaxed_energy", run.relaxed_energy},
               {"initial_excess", run.trajectory.frames.front().excess}};
        if (run.failure) {
            j["error"] = Json{{"kind", "instability"}, {"message", *run.failure}};
            j["frames"] = run.trajectory.frames.size();
            if (!failure) failure = *run.failure;
        } else {
            j["decay_time"] = run.recall.decay_time ? Json(*run.recall.decay_time) : Json(nullptr);
            j["decayed"] = run.recall.decay_time.has_value();
            j["direction_fidelity"] = run.recall.direction_fidelity;
            j["smoothed_excess_monotone"] = run.monotone;
            j["relative_energy_drift"] = run.drift;
            min_fid = std::min(min_fid, run.recall.direction_fidelity);
            all_decayed = all_decayed && run.recall.decay_time.has_value();
        }
        list.push_back(j);
    }
    out["runs"] = list;
    out["summary"] = Json{{"min_direction_fidelity", min_fid}, {"all_decayed", all_decayed}};
    write_json(dir / "memory.json", out);
    if (failure) throw Error(ErrorKind::instability, *failure);
    return 0;
}

} // namespace qbdspin::cli
