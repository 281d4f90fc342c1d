#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qps/io.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using namespace qps;

struct Pipeline {
  SystemBlocks sys;
  PrecompI pI;
  PrecompII pII;
};

Pipeline build(const RunConfig& cfg, bool verbose) {
  std::vector<Discretization> discs;
  for (const auto& g : cfg.stack.interfaces)
    discs.push_back(build_discretization(g, cfg.panels, cfg.cell));
  Pipeline p{assemble_system(cfg.stack, discs, cfg.cell), {}, {}};
  p.pI = precompute_I(p.sys, cfg.solver);
  p.pII = precompute_II(p.sys, p.pI);
  if (verbose)
    std::fprintf(stderr, "precomp I %.3fs (%llu kernel evals), II %.3fs\n",
                 p.pI.seconds,
                 static_cast<unsigned long long>(p.pI.kernel_evals),
                 p.pII.seconds);
  return p;
}

int total_nodes(const SystemBlocks& sys) {
  int n = 0;
  for (const auto& d : sys.interfaces) n += d.size();
  return n;
}

std::vector<int> factor_ranks(const PrecompI& pI) {
  std::vector<int> ranks;
  for (const auto& f : pI.lr.vert_upper) ranks.push_back(f.L.cols());
  for (const auto& f : pI.lr.nb_plus) ranks.push_back(f.L.cols());
  for (const auto& f : pI.lr.nb_minus) ranks.push_back(f.L.cols());
  for (const auto& f : pI.lr.vert_lower) ranks.push_back(f.L.cols());
  return ranks;
}

std::vector<Point2> grid_points(const FieldRequest& f) {
  std::vector<Point2> pts;
  pts.reserve(static_cast<size_t>(f.nx) * f.ny);
  for (int iy = 0; iy < f.ny; ++iy)
    for (int ix = 0; ix < f.nx; ++ix)
      pts.push_back({f.nx == 1 ? f.x0 : f.x0 + (f.x1 - f.x0) * ix / (f.nx - 1),
                     f.ny == 1 ? f.y0
                               : f.y0 + (f.y1 - f.y0) * iy / (f.ny - 1)});
  return pts;
}

std::string join(const std::string& dir, const char* name) {
  return (std::filesystem::path(dir) / name).string();
}

int run_task(const std::string& task, const RunConfig& cfg, bool verbose) {
  std::filesystem::create_directories(cfg.out_dir);
  SweepTiming timing;

  if (task == "update") {
    if (!cfg.update)
      throw std::runtime_error("update task needs an \"update\" section");
    auto st = make_state(cfg.stack, std::vector<int>(
                                        cfg.stack.num_interfaces(), cfg.panels),
                         cfg.cell, cfg.solver);
    const auto& u = *cfg.update;
    if (u.geometry)
      update_interface(st, u.interface_index, *u.geometry, u.panels);
    else
      update_wavenumber(st, u.layer, u.wavenumber);
    if (verbose) {
      std::fprintf(stderr, "rebuilt interfaces:");
      for (int i : st.last_rebuilt) std::fprintf(stderr, " %d", i);
      std::fprintf(stderr, "\n");
    }
    const auto results =
        sweep(st.sys, st.pI, st.pII, {cfg.theta}, st.opt, &timing);
    write_summary_json(join(cfg.out_dir, "solve.json"), results);
    write_timing_json(join(cfg.out_dir, "timing.json"), timing,
                      total_nodes(st.sys), factor_ranks(st.pI));
    write_manifest(join(cfg.out_dir, "manifest.json"), cfg, &st.stack);
    std::printf("flux_error %.3e\n", results.front().flux_error);
    return 0;
  }

  const Pipeline p = build(cfg, verbose);
  timing.precomp1_s = p.pI.seconds;
  timing.precomp2_s = p.pII.seconds;

  if (task == "solve") {
    const auto results =
        sweep(p.sys, p.pI, p.pII, {cfg.theta}, cfg.solver, &timing);
    write_summary_json(join(cfg.out_dir, "solve.json"), results);
    std::printf("flux_error %.3e\n", results.front().flux_error);
  } else if (task == "sweep") {
    if (cfg.angles.empty())
      throw std::runtime_error("sweep task needs a non-empty \"angles\" list");
    const auto results =
        sweep(p.sys, p.pI, p.pII, cfg.angles, cfg.solver, &timing);
    write_summary_json(join(cfg.out_dir, "sweep.json"), results);
    double worst = 0.0;
    for (const auto& r : results) worst = std::max(worst, r.flux_error);
    std::printf("%zu angles in %d groups, worst flux_error %.3e\n",
                results.size(), timing.n_groups, worst);
  } else if (task == "field") {
    if (!cfg.field)
      throw std::runtime_error("field task needs a \"field\" section");
    const auto results =
        sweep(p.sys, p.pI, p.pII, {cfg.theta}, cfg.solver, &timing);
    const auto grid = evaluate_field(p.sys, results.front(),
                                     grid_points(*cfg.field),
                                     cfg.field->total);
    write_field_csv(join(cfg.out_dir, "field.csv"), grid);
    write_field_json(join(cfg.out_dir, "field.json"), grid);
    write_summary_json(join(cfg.out_dir, "solve.json"), results);
    std::printf("%zu field points, flux_error %.3e\n", grid.points.size(),
                results.front().flux_error);
  } else if (task == "bragg") {
    const auto angles =
        cfg.angles.empty() ? std::vector<double>{cfg.theta} : cfg.angles;
    const auto results = sweep(p.sys, p.pI, p.pII, angles, cfg.solver,
                               &timing);
    std::vector<std::pair<double, BraggTable>> tables;
    for (const auto& r : results)
      tables.emplace_back(
          r.theta, bragg_efficiencies(r, cfg.stack.wavenumbers.front(),
                                      cfg.stack.wavenumbers.back(),
                                      cfg.stack.period, cfg.cell.K));
    write_bragg_csv(join(cfg.out_dir, "bragg.csv"), tables);
    write_summary_json(join(cfg.out_dir, "solve.json"), results);
    std::printf("%zu Bragg tables written\n", tables.size());
  } else {
    throw std::runtime_error("unknown task \"" + task + "\"");
  }

  write_timing_json(join(cfg.out_dir, "timing.json"), timing,
                    total_nodes(p.sys), factor_ranks(p.pI));
  write_manifest(join(cfg.out_dir, "manifest.json"), cfg);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quasi-periodic multilayer transmission solver"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::vector<std::string> overrides;
  int threads = 0;
  bool verbose = false;

  for (const char* task : {"solve", "sweep", "field", "bragg", "update"}) {
    auto* sub = app.add_subcommand(task);
    sub->add_option("--config", config_path, "config JSON")->required();
    sub->add_option("--out", out_dir, "output directory (overrides config)");
    sub->add_option("--set", overrides, "dotted-path override key=value");
    sub->add_option("--threads", threads, "OpenMP thread count");
    sub->add_flag("--verbose", verbose, "progress on stderr");
  }
  CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#endif

  const std::string task = app.get_subcommands().front()->get_name();
  try {
    RunConfig cfg = load_config(config_path, overrides);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    return run_task(task, cfg, verbose);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "qpscatter %s: %s\n", task.c_str(), e.what());
    return 1;
  }
}
