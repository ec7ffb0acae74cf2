#pragma once

#include <string>
#include <vector>

#include "imstab/stability.hpp"

namespace imstab {

// Parses and validates the experiment configuration. Sections: domain, grid,
// problem1, problem2, sectors, tube, chain, mode (plus id and workers).
// Unknown keys anywhere are rejected; defaults are filled and echoed.
//
// `overrides` are dotted key=value pairs (e.g. grid.n_cells=64) applied to
// the JSON text before validation. `need_problem2` names the subcommands
// that require the second problem.
ExperimentConfig parse_config_text(const std::string& json_text,
                                   const std::vector<std::string>& overrides,
                                   bool need_problem2);

ExperimentConfig parse_config_file(const std::string& path,
                                   const std::vector<std::string>& overrides,
                                   bool need_problem2);

// The effective configuration (defaults filled) as deterministic JSON.
std::string effective_config_json(const ExperimentConfig& cfg);

}  // namespace imstab
