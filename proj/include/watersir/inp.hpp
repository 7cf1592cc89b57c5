#ifndef WATERSIR_INP_HPP
#define WATERSIR_INP_HPP

#include <optional>
#include <string>
#include <vector>

#include "watersir/netfile.hpp"
#include "watersir/network.hpp"

// Importer for a small text subset of the EPANET INP format. Supported
// sections: [JUNCTIONS], [RESERVOIRS], [TANKS], [PIPES], [PUMPS],
// [COORDINATES] (ignored) and [END]; any other section is rejected by
// name. Values are metric: elevations, heads and lengths in meters,
// demands in L/s, pipe diameters in millimeters.
//
// Mapping notes:
//   - A reservoir's fixed grade becomes a source at that elevation with a
//     zero-width head range; a tank becomes a source whose head may sit
//     anywhere between its min and max water levels.
//   - Pipe roughness is ignored (head loss here uses a friction factor,
//     not roughness); a warning records the substitution.
//   - Pump curves (POWER or HEAD keywords) do not reduce to an affine
//     gain curve, so pumps import with the gain bounds supplied in
//     InpOptions and a warning; importing a [PUMPS] section without
//     those bounds is an error.

namespace watersir {

struct InpOptions {
  double friction_factor = 0.02;        // applied to every imported pipe
  std::optional<double> pump_gain_min_m;  // required when pumps are present
  std::optional<double> pump_gain_max_m;
  double junction_head_min_m = 0.0;  // head range given to every junction
  double junction_head_max_m = 1000.0;
};

struct InpImport {
  Network net;
  std::vector<std::string> warnings;
};

// Parses the subset described above. Throws ParseError with the offending
// line on syntax problems, unsupported sections, or missing columns. The
// result is NOT validated; run validate() to learn whether the imported
// topology is a tree.
InpImport parse_inp_subset(const std::string& text,
                           const InpOptions& options = {});

}  // namespace watersir

#endif
