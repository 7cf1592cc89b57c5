#ifndef WATERSIR_NETFILE_HPP
#define WATERSIR_NETFILE_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "watersir/network.hpp"

// Text format for network files: a line-oriented block grammar.
//
//   schema 1
//   defaults { gravity 9.81  ... }
//   node <id> { kind source  elevation_m 30  ... }
//   edge <id> { from 1  to 2  length_m 500  ... }
//   sir { variable_nodes 3 5 9  grid_points 9  rounds 3 }
//
// One `key value` pair per line inside a block; `#` starts a comment; `}`
// closes a block on its own line. Flows and demands are written in L/s
// (keys carry the _lps suffix) and converted to m^3/s on parse. Unknown
// keys are errors: every diagnostic carries line and column.

namespace watersir {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int col, const std::string& message)
      : std::runtime_error(std::to_string(line) + ":" + std::to_string(col) +
                           ": " + message),
        line(line),
        col(col) {}
  int line;
  int col;
};

struct FileSettings {
  double gravity = 9.81;
  double friction_factor = 0.02;
  double efficiency = 0.75;
  double tariff = 1.0;
  int grid_points = 9;
  int rounds = 3;
  std::vector<std::string> variable_nodes;  // optional explicit axis order
};

struct ParsedNetwork {
  Network net;
  FileSettings settings;
};

// Parses and, by default, validates. Passing run_validate = false returns
// the raw network so callers can present the full violation list.
ParsedNetwork parse_network(const std::string& text, bool run_validate = true);

// Inverse of parse_network; emitted numbers reparse to identical fields.
std::string serialize_network(const Network& net,
                              const FileSettings& settings);

std::string read_file(const std::string& path);

// Write-temp-then-rename so readers never observe partial content.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace watersir

#endif
