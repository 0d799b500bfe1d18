#include "stratmine/viz.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "file_io.hpp"
#include "stratmine/error.hpp"
#include "stratmine/parallel.hpp"
#include "text_format.hpp"

namespace stratmine {

double ForceLayer::mean_time(std::size_t cell) const {
  if (count[cell] == 0) return 0.0;
  const double sum = std::ldexp(static_cast<double>(time_sum[cell]), -kTimeBits);
  return sum / static_cast<double>(count[cell]);
}

std::uint64_t ForceLayer::max_count() const {
  return count.empty() ? 0 : *std::max_element(count.begin(), count.end());
}

namespace {

OccupancyGrid empty_grid(std::size_t width, std::size_t height) {
  OccupancyGrid g;
  g.width = width;
  g.height = height;
  for (ForceLayer* l : {&g.friendly, &g.enemy}) {
    l->count.assign(width * height, 0);
    l->time_sum.assign(width * height, 0);
  }
  return g;
}

std::size_t to_cell(double v, std::size_t extent, const EpisodeLog& log, std::size_t step) {
  if (!(v >= 0.0 && v <= static_cast<double>(extent)))
    throw DataError("episode '" + log.id + "' step " + std::to_string(step) + ": unit outside the board");
  return std::min(static_cast<std::size_t>(std::floor(v)), extent - 1);
}

void accumulate(const EpisodeLog& log, double t_cut, OccupancyGrid& g) {
  const std::size_t len = log.length();
  std::vector<std::uint8_t> seen(g.width * g.height);
  for (std::size_t s = 0; s < len; ++s) {
    const double t = len == 1 ? 0.0 : static_cast<double>(s) / static_cast<double>(len - 1);
    if (t > t_cut) break;
    const std::uint64_t fixed_t =
        len == 1 ? 0 : (static_cast<std::uint64_t>(s) << ForceLayer::kTimeBits) / (len - 1);
    std::fill(seen.begin(), seen.end(), 0);
    for (const UnitSnapshot& u : log.snapshots[s]) {
      const std::size_t c = g.cell(to_cell(u.x, g.width, log, s), to_cell(u.y, g.height, log, s));
      const std::uint8_t bit = u.force == Force::Friendly ? 1 : 2;
      if (seen[c] & bit) continue;
      seen[c] |= bit;
      ForceLayer& l = u.force == Force::Friendly ? g.friendly : g.enemy;
      ++l.count[c];
      l.time_sum[c] += fixed_t;
    }
  }
}

double blend(double dst, double src, double alpha) { return alpha * src + (1.0 - alpha) * dst; }

}  // namespace

OccupancyGrid occupancy_grids(std::span<const EpisodeLog> logs, double t_cut, std::size_t width,
                              std::size_t height, unsigned threads) {
  if (logs.empty()) throw std::invalid_argument("no episodes to visualize");
  if (!(t_cut >= 0.0 && t_cut <= 1.0)) throw std::invalid_argument("t_cut must lie in [0, 1]");
  if (width == 0 || height == 0) throw std::invalid_argument("grid dimensions must be positive");
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, logs.size());
  std::vector<OccupancyGrid> partial(workers, empty_grid(width, height));
  const std::size_t chunk = (logs.size() + workers - 1) / workers;
  parallel_for(workers, static_cast<unsigned>(workers), [&](std::size_t w) {
    for (std::size_t i = w * chunk; i < std::min(logs.size(), (w + 1) * chunk); ++i)
      accumulate(logs[i], t_cut, partial[w]);
  });
  OccupancyGrid g = empty_grid(width, height);
  for (const OccupancyGrid& p : partial) {
    for (std::size_t c = 0; c < width * height; ++c) {
      g.friendly.count[c] += p.friendly.count[c];
      g.friendly.time_sum[c] += p.friendly.time_sum[c];
      g.enemy.count[c] += p.enemy.count[c];
      g.enemy.time_sum[c] += p.enemy.time_sum[c];
    }
  }
  return g;
}

Rgb cell_color(const OccupancyGrid& g, std::size_t x, std::size_t y) {
  const std::size_t c = g.cell(x, y);
  double px[3] = {255.0, 255.0, 255.0};
  const std::uint64_t enemy_max = g.enemy.max_count();
  if (g.enemy.count[c] > 0) {
    const double a = static_cast<double>(g.enemy.count[c]) / static_cast<double>(enemy_max);
    const double m = g.enemy.mean_time(c);
    const double col[3] = {255.0, 255.0 * (1.0 - m), 0.0};
    for (int i = 0; i < 3; ++i) px[i] = blend(px[i], col[i], a);
  }
  const std::uint64_t friendly_max = g.friendly.max_count();
  if (g.friendly.count[c] > 0) {
    const double a = static_cast<double>(g.friendly.count[c]) / static_cast<double>(friendly_max);
    const double m = g.friendly.mean_time(c);
    const double col[3] = {0.0, 255.0 * (1.0 - m), 255.0 * m};
    for (int i = 0; i < 3; ++i) px[i] = blend(px[i], col[i], a);
  }
  Rgb out;
  for (int i = 0; i < 3; ++i) out[i] = static_cast<std::uint8_t>(std::clamp(std::floor(px[i] + 0.5), 0.0, 255.0));
  // a visited cell never rounds back to the background
  if (out == Rgb{255, 255, 255}) {
    if (g.friendly.count[c] > 0) out[0] = 254;
    else if (g.enemy.count[c] > 0) out[2] = 254;
  }
  return out;
}

std::string render_ppm(const OccupancyGrid& g, std::size_t scale) {
  if (scale < 1) throw std::invalid_argument("scale must be at least 1");
  const std::size_t w = g.width * scale;
  const std::size_t h = g.height * scale;
  std::string out = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  const std::size_t header = out.size();
  out.resize(header + w * h * 3);
  for (std::size_t y = 0; y < g.height; ++y) {
    for (std::size_t x = 0; x < g.width; ++x) {
      const Rgb c = cell_color(g, x, y);
      const std::size_t row0 = (g.height - 1 - y) * scale;
      for (std::size_t dy = 0; dy < scale; ++dy) {
        for (std::size_t dx = 0; dx < scale; ++dx) {
          const std::size_t p = header + ((row0 + dy) * w + x * scale + dx) * 3;
          for (int i = 0; i < 3; ++i) out[p + i] = static_cast<char>(c[i]);
        }
      }
    }
  }
  return out;
}

std::size_t painted_pixels(const std::string& ppm) {
  std::size_t pos = 0;
  for (int fields = 0; fields < 4; ++fields) {
    while (pos < ppm.size() && std::isspace(static_cast<unsigned char>(ppm[pos]))) ++pos;
    while (pos < ppm.size() && !std::isspace(static_cast<unsigned char>(ppm[pos]))) ++pos;
  }
  ++pos;
  std::size_t painted = 0;
  for (; pos + 3 <= ppm.size(); pos += 3) {
    const auto r = static_cast<unsigned char>(ppm[pos]);
    const auto g = static_cast<unsigned char>(ppm[pos + 1]);
    const auto b = static_cast<unsigned char>(ppm[pos + 2]);
    if (r != 255 || g != 255 || b != 255) ++painted;
  }
  return painted;
}

void write_grid_csv(std::ostream& out, const OccupancyGrid& g) {
  out << "force,x,y,mean_time,count\n";
  for (Force f : {Force::Friendly, Force::Enemy}) {
    const ForceLayer& l = g.layer(f);
    for (std::size_t y = 0; y < g.height; ++y) {
      for (std::size_t x = 0; x < g.width; ++x) {
        const std::size_t c = g.cell(x, y);
        if (l.count[c] == 0) continue;
        out << to_string(f) << ',' << x << ',' << y << ',' << detail::shortest(l.mean_time(c)) << ',' << l.count[c]
            << '\n';
      }
    }
  }
}

std::vector<std::filesystem::path> write_frames(std::span<const EpisodeLog> logs, const std::filesystem::path& dir,
                                                const std::string& prefix, std::size_t width, std::size_t height,
                                                std::size_t scale, std::size_t steps, unsigned threads) {
  if (steps < 1) throw std::invalid_argument("frame count must be at least 1");
  std::vector<std::filesystem::path> paths;
  for (std::size_t i = 0; i <= steps; ++i) {
    const double t_cut = static_cast<double>(i) / static_cast<double>(steps);
    const OccupancyGrid g = occupancy_grids(logs, t_cut, width, height, threads);
    char name[64];
    std::snprintf(name, sizeof name, "_t%03d.ppm", static_cast<int>(std::lround(100.0 * t_cut)));
    const auto path = dir / (prefix + name);
    auto out = detail::open_for_write(path);
    const std::string img = render_ppm(g, scale);
    out.write(img.data(), static_cast<std::streamsize>(img.size()));
    paths.push_back(path);
  }
  return paths;
}

}  // namespace stratmine
