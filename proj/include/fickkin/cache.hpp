#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fickkin/collision.hpp"
#include "fickkin/config.hpp"
#include "fickkin/linear_operator.hpp"

namespace fickkin {

/// Mixture, grid and operator blocks for one configuration. Not movable: the
/// stencil and operators keep pointers into it.
struct OperatorBundle {
  OperatorBundle(Mixture m, VelocityGrid g) : mix(std::move(m)), grid(std::move(g)) {}
  OperatorBundle(const OperatorBundle&) = delete;
  OperatorBundle& operator=(const OperatorBundle&) = delete;

  Mixture mix;
  VelocityGrid grid;
  OperatorBlocks blocks;
  bool blocks_cached = false;
  bool stencil_cached = false;
  std::size_t kept_events = 0;
  std::size_t truncated_events = 0;
  double assembly_seconds = 0.0;
  std::string blocks_path;
  std::vector<std::string> warnings;
};

/// Content key of everything the operator blocks depend on.
std::uint64_t operator_key(const Mixture& mix, const VelocityGrid& grid);

/// Loads the blocks from `cache_dir` or assembles them (through a cached
/// stencil) and stores them. An empty cache_dir disables caching. A corrupted
/// cache file is regenerated and reported in `warnings`.
std::unique_ptr<OperatorBundle> load_or_build(const RunConfig& cfg, const std::string& cache_dir);

}  // namespace fickkin
