#include "fickkin/cache.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>

#include "fickkin/errors.hpp"
#include "fickkin/hash.hpp"

namespace fickkin {

std::uint64_t operator_key(const Mixture& mix, const VelocityGrid& grid) {
  Fnv1a h;
  h.add(static_cast<std::int64_t>(mix.hash()));
  h.add(static_cast<std::int64_t>(grid.hash()));
  return h.value();
}

namespace {

// A cache file whose header names another mixture or grid counts as corrupted.
template <class F>
bool load_cached(F&& load) {
  try {
    return load();
  } catch (const Error&) {
    return false;
  }
}

}  // namespace

std::unique_ptr<OperatorBundle> load_or_build(const RunConfig& cfg, const std::string& cache_dir) {
  Mixture mix = make_mixture(cfg);
  VelocityGrid grid = make_grid(cfg, mix);
  auto b = std::make_unique<OperatorBundle>(std::move(mix), std::move(grid));
  const Eigen::VectorXd n = concentrations(cfg);
  const auto t0 = std::chrono::steady_clock::now();

  char key[17];
  std::snprintf(key, sizeof key, "%016llx", static_cast<unsigned long long>(operator_key(b->mix, b->grid)));
  std::string stencil_path;
  if (!cache_dir.empty()) {
    std::filesystem::create_directories(cache_dir);
    b->blocks_path = cache_dir + "/operator-" + key + ".fl1";
    stencil_path = cache_dir + "/stencil-" + key + ".fq1";
    if (std::filesystem::exists(b->blocks_path)) {
      if (load_cached([&] { return load_blocks(b->blocks, b->mix, b->grid, b->blocks_path); }))
        b->blocks_cached = true;
      else
        b->warnings.push_back("operator cache " + b->blocks_path + " is corrupted, regenerating");
    }
  }
  if (!b->blocks_cached) {
    CollisionStencil stencil(b->mix, b->grid);
    b->kept_events = static_cast<std::size_t>(stencil.total_events() - stencil.truncated_events());
    b->truncated_events = static_cast<std::size_t>(stencil.truncated_events());
    b->blocks = assemble_blocks(stencil);
    if (!cache_dir.empty()) {
      stencil.save(stencil_path);
      save_blocks(b->blocks, b->mix, b->grid, n, b->blocks_path);
    }
  }
  b->assembly_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return b;
}

}  // namespace fickkin
