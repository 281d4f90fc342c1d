#pragma once

#include <optional>
#include <string>

#include "qps/postproc.hpp"

namespace qps {

struct FieldRequest {
  double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;
  int nx = 0, ny = 0;
  bool total = true;
};

/// One geometry swap or one wavenumber retune, not both.
struct UpdateRequest {
  int interface_index = -1;
  std::optional<InterfaceGeometry> geometry;
  int panels = 0;
  int layer = -1;
  double wavenumber = 0.0;
};

struct RunConfig {
  LayerStack stack;
  int panels = 10;
  UnitCellParams cell;  // defaults are the reference configuration
  SolverOptions solver;
  double theta = -M_PI / 2.0;
  std::vector<double> angles;  // sweep / bragg
  std::optional<FieldRequest> field;
  std::optional<UpdateRequest> update;
  std::string out_dir = ".";
  std::string raw;  // effective config after overrides, for the manifest
};

/// Parse a config file, applying dotted-path overrides ("cell.K=10",
/// "solver.schur_eps=1e-12") on top. Throws std::runtime_error with the
/// offending key on any schema violation.
RunConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides = {});

/// FNV-1a over the canonical serialized stack; stable within a platform.
std::uint64_t geometry_hash(const LayerStack& stack);

void write_field_csv(const std::string& path, const FieldGrid& grid);
void write_field_json(const std::string& path, const FieldGrid& grid);
void write_bragg_csv(const std::string& path,
                     const std::vector<std::pair<double, BraggTable>>& tables);
void write_summary_json(const std::string& path,
                        const std::vector<SolveResult>& results);
void write_timing_json(const std::string& path, const SweepTiming& timing,
                       int n_total, const std::vector<int>& ranks);

/// Reproducibility record: full parameter set plus the geometry hash.
/// updated, when present, is the stack after an update task (both
/// geometries end up in the manifest).
void write_manifest(const std::string& path, const RunConfig& cfg,
                    const LayerStack* updated = nullptr);

}  // namespace qps
