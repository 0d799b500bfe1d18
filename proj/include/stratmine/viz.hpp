#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "stratmine/trace_model.hpp"

namespace stratmine {

/// Visit statistics of one force. Normalized visit times are summed in fixed
/// point (2^-40 units) so aggregation is exact and order independent.
struct ForceLayer {
  static constexpr int kTimeBits = 40;

  std::vector<std::uint64_t> count;
  std::vector<std::uint64_t> time_sum;

  /// Mean normalized time of a visited cell; 0 for an unvisited one.
  double mean_time(std::size_t cell) const;
  std::uint64_t max_count() const;
};

struct OccupancyGrid {
  std::size_t width = 0;
  std::size_t height = 0;
  ForceLayer friendly;
  ForceLayer enemy;

  const ForceLayer& layer(Force f) const { return f == Force::Friendly ? friendly : enemy; }
  std::size_t cell(std::size_t x, std::size_t y) const { return y * width + x; }
};

/// Aggregates every step s with s / (len - 1) <= t_cut (len = 1 counts as
/// time 0). A cell-step counts once per force however many of its units
/// stand there. Throws std::invalid_argument on empty input or t_cut outside
/// [0, 1], DataError on a unit outside the board.
OccupancyGrid occupancy_grids(std::span<const EpisodeLog> logs, double t_cut, std::size_t width,
                              std::size_t height, unsigned threads = 1);

using Rgb = std::array<std::uint8_t, 3>;

/// Pixel colour of one cell: enemy then friendly layer over white. A visited
/// cell whose blend rounds to white is drawn one step off white.
Rgb cell_color(const OccupancyGrid& g, std::size_t x, std::size_t y);

/// Binary PPM (P6), y axis pointing up, each cell a scale x scale block.
std::string render_ppm(const OccupancyGrid& g, std::size_t scale = 1);

/// Number of non-white pixels in a P6 image produced by render_ppm.
std::size_t painted_pixels(const std::string& ppm);

/// Rows force,x,y,mean_time,count for visited cells.
void write_grid_csv(std::ostream& out, const OccupancyGrid& g);

/// Frames at t_cut = 0, 1/steps, ..., 1 named <prefix>_t<percent>.ppm.
std::vector<std::filesystem::path> write_frames(std::span<const EpisodeLog> logs, const std::filesystem::path& dir,
                                                const std::string& prefix, std::size_t width, std::size_t height,
                                                std::size_t scale = 8, std::size_t steps = 10, unsigned threads = 1);

}  // namespace stratmine
