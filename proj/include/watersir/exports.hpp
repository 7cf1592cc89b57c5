#ifndef WATERSIR_EXPORTS_HPP
#define WATERSIR_EXPORTS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "watersir/netfile.hpp"
#include "watersir/oracle.hpp"
#include "watersir/polytope.hpp"

// Renderers for run artifacts. All outputs are deterministic: identical
// inputs give byte-identical files. JSON documents carry a versioned
// "schema" tag; OFF meshes are triangulated (a fan per facet ring); SVG
// charts are self-contained with no external references.

namespace watersir {

enum class Artifact { polytope, sequence, grid, timing };
enum class ExportFormat { json, csv, off, svg };

Artifact artifact_from_name(const std::string& name);
ExportFormat format_from_name(const std::string& name);

struct TimingReport {
  struct Stage {
    std::string name;
    double seconds = 0.0;
  };
  std::vector<Stage> stages;
};

// Pointers to whichever artifacts the caller has; only the one selected
// by export_artifact needs to be set.
struct ExportBundle {
  const Polytope* polytope = nullptr;
  const PolytopeSequence* sequence = nullptr;
  const GridScreen* grid = nullptr;
  const TimingReport* timing = nullptr;
};

// JSON views of the run artifacts and their inverses, so a run directory
// can be re-rendered later without recomputation.
nlohmann::json to_json(const Polytope& p);
nlohmann::json to_json(const PolytopeSequence& seq);
nlohmann::json to_json(const GridScreen& g);
nlohmann::json to_json(const TimingReport& t);
Polytope polytope_from_json(const nlohmann::json& j);
PolytopeSequence sequence_from_json(const nlohmann::json& j);
GridScreen grid_from_json(const nlohmann::json& j);
TimingReport timing_from_json(const nlohmann::json& j);

// Renders one artifact in one format. Throws std::invalid_argument for an
// unsupported (artifact, format) pair or when the needed bundle entry is
// missing, and std::runtime_error("nothing to export") for an empty
// sequence. Supported pairs:
//   polytope: json, csv (vertices), off (3-D only), svg (2-D projections)
//   sequence: json, csv (volumes), svg (relative-volume bars)
//   grid:     json, csv
//   timing:   json, csv, svg (per-stage bars)
std::string export_artifact(const ExportBundle& bundle, Artifact what,
                            ExportFormat format);

// True when the (artifact, format) pair above is renderable, so callers can
// reject a request before loading any artifact data.
bool export_supported(Artifact what, ExportFormat format);

// FNV-1a 64-bit content hash, printed as 16 hex digits.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hash_hex(std::uint64_t h);

// Writes a reproducible run directory: inputs.wds (verbatim input),
// inputs-hash.txt, settings.json, sequence.json, timing.json, the volume
// chart, vertex CSVs, and a final-polytope OFF mesh when 3-D. Creates
// the directory if needed; individual writes are atomic.
void write_run_dir(const std::string& dir, const std::string& input_text,
                   const FileSettings& settings, int rounds,
                   const PolytopeSequence& seq, const TimingReport& timing);

}  // namespace watersir

#endif
