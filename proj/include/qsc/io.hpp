#pragma once

// File formats: model and quadruple descriptors (JSON), operator dumps and
// per-slice / per-pair tables (CSV).

#include <filesystem>
#include <string>

#include "json.hpp"

#include "qsc/martingale.hpp"
#include "qsc/qsi.hpp"
#include "qsc/represent.hpp"

namespace qsc::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

struct ModelDescriptor {
  MultiplicityConfig mult;
  InitialConfig init;
  TimeGrid grid;
  int N = 1;

  /// {d, rho[], m, alpha[], T, n, N}; rho, m, alpha and T are optional.
  /// Errors name the offending field under `path`.
  static ModelDescriptor from_json(const json& j, const std::string& path = "model");
  json to_json() const;
  ModelPtr build() const;
};

/// [p1, p2, p3] or {"p1":..,"p2":..,"p3":..}.
WeightTriple weight_from_json(const json& j, const std::string& path);
json weight_to_json(const WeightTriple& w);
/// "a,b,c" as used on the command line.
WeightTriple parse_weight(const std::string& text);

std::string read_file(const fs::path& path);
void write_file(const fs::path& path, const std::string& text);
json read_json(const fs::path& path);

/// One integrand entry: "zero", "identity", "scaled:<c>", or a path to an
/// operator dump, relative to `base`.
OperatorMatrix load_entry(const json& entry, const ModelPtr& model, const fs::path& base,
                          const std::string& path);

/// Quadruple descriptor:
///   {"p": [..], "default": {...}, "slices": [{"E1": .., "E2": .., "E3": .., "E4": ..}, ...]}
/// E1 is a d x d array, E2 and E3 arrays of d entries, E4 one entry; a single
/// entry in place of an array applies to every channel. Missing families and
/// slices fall back to "default", then to "zero".
IntegrandQuadruple load_quadruple(const json& desc, const ModelPtr& model, const fs::path& base);
IntegrandQuadruple load_quadruple_file(const fs::path& file, const ModelPtr& model);

/// Writes operator dumps for every entry that is not a preset and returns the descriptor.
json save_quadruple(const IntegrandQuadruple& q, const fs::path& dir, const std::string& stem);

/// Process descriptor: {"p": .., "q": .., "ops": ["xi_0.csv", ...]} with n+1 dumps.
ProcessSample load_process(const json& desc, const ModelPtr& model, const fs::path& base);
ProcessSample load_process_file(const fs::path& file, const ModelPtr& model);
json save_process(const ProcessSample& P, const fs::path& dir, const std::string& stem);

/// v,u,lhs_forward,lhs_adjoint,m,pass
std::string regularity_csv(const RegularityReport& rep);
/// slice,defect,E4
std::string defect_csv(const ExtractionResult& ex);
/// {"density": [...]} with one value per slice, or {"constant": c}.
RadonMeasureEstimate measure_from_json(const json& j, int n, double dt);
json measure_to_json(const RadonMeasureEstimate& m);

/// Shortest round-trip representation.
std::string fmt(double x);

}  // namespace qsc::io
