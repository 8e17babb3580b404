#include <algorithm>
#include <cmath>

#include "rlrn/errors.hpp"
#include "rlrn/sample.hpp"

namespace rlrn::data {

namespace {

// Writes `value` (max-blended) into every cell whose centre lies inside the
// oriented footprint at `pose`.
void stamp(std::vector<std::uint8_t>& bytes, const RasterSpec& rs, int channel, const LocalPose& pose, std::uint8_t value) {
  const double cell = rs.cell();
  const double hl = 0.5 * rs.vehicle_length, hw = 0.5 * rs.vehicle_width;
  const double c = std::cos(pose.heading), s = std::sin(pose.heading);
  const double reach = std::hypot(hl, hw);
  // local (x forward, y left) -> (row, col): row = H/2 - x/cell - 0.5, col = W/2 - y/cell - 0.5
  const int row_lo = std::max(0, static_cast<int>(std::floor(0.5 * rs.height - (pose.x + reach) / cell - 0.5)));
  const int row_hi = std::min(rs.height - 1, static_cast<int>(std::ceil(0.5 * rs.height - (pose.x - reach) / cell - 0.5)));
  const int col_lo = std::max(0, static_cast<int>(std::floor(0.5 * rs.width - (pose.y + reach) / cell - 0.5)));
  const int col_hi = std::min(rs.width - 1, static_cast<int>(std::ceil(0.5 * rs.width - (pose.y - reach) / cell - 0.5)));
  for (int row = row_lo; row <= row_hi; ++row) {
    const double x = (0.5 * rs.height - row - 0.5) * cell - pose.x;
    for (int col = col_lo; col <= col_hi; ++col) {
      const double y = (0.5 * rs.width - col - 0.5) * cell - pose.y;
      const double along = c * x + s * y, across = -s * x + c * y;
      if (std::abs(along) <= hl && std::abs(across) <= hw) {
        auto& b = bytes[(static_cast<std::size_t>(row) * rs.width + col) * 3 + channel];
        b = std::max(b, value);
      }
    }
  }
}

}  // namespace

BevRaster rasterize_bev(const SceneSample& sample, int index, const RasterSpec& spec) {
  if (index < 0 || index >= sample.vehicle_count())
    throw UsageError("rasterize_bev: vehicle index " + std::to_string(index) + " out of range");
  BevRaster r{spec.width, spec.height, {}};
  r.bytes.assign(static_cast<std::size_t>(spec.width) * spec.height * 3, 0);
  if (sample.drivable.size() == static_cast<std::size_t>(spec.width) * spec.height)
    for (std::size_t i = 0; i < sample.drivable.size(); ++i) r.bytes[i * 3] = sample.drivable[i] ? 255 : 0;

  for (std::size_t v = 0; v < sample.local_poses.size(); ++v) {
    const auto& poses = sample.local_poses[v];
    const int h = static_cast<int>(poses.size());
    for (int k = 0; k < h; ++k) {
      const auto value = static_cast<std::uint8_t>(255 * (k + 1) / h);
      stamp(r.bytes, spec, 1, poses[static_cast<std::size_t>(k)], value);
      if (static_cast<int>(v) == index) stamp(r.bytes, spec, 2, poses[static_cast<std::size_t>(k)], value);
    }
  }
  return r;
}

void rasterize_all(SceneSample& sample, const RasterSpec& spec) {
  sample.rasters.clear();
  sample.rasters.reserve(static_cast<std::size_t>(sample.vehicle_count()));
  for (int i = 0; i < sample.vehicle_count(); ++i) sample.rasters.push_back(rasterize_bev(sample, i, spec));
}

}  // namespace rlrn::data
