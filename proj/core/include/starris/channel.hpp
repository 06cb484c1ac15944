#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "starris/system_model.hpp"

namespace starris {

using Vec3 = Eigen::Vector3d;

struct Geometry {
  Vec3 bs_position{0.0, 0.0, 10.0};
  Vec3 ris_position{50.0, 0.0, 10.0};
  // Points toward the reflection half-space (the BS side by default).
  Vec3 ris_plane_normal{-1.0, 0.0, 0.0};
  std::vector<Vec3> user_positions;

  // Users evenly spaced on a horizontal circle; angles 2*pi*(k + 1/4)/K keep
  // every user off the RIS plane and split even K evenly between sides.
  static Geometry Circle(int num_users, const Vec3& center = Vec3{50.0, 5.0, 1.5},
                         double radius = 5.0);

  void Validate() const;
};

struct PathLossModel {
  double exponent = 2.2;
  double ref_loss_db = 10.0;

  // Linear power gain 10^(-ref/10) * d^(-exponent).
  double Gain(double distance_m) const;
};

// Side label from the sign of (user - ris) . normal; zero counts as reflection.
UserSide ClassifySide(const Geometry& geometry, const Vec3& user);

// Rayleigh small-scale fading scaled by the link path loss. Draw order is
// element-major: for n = 0..N-1, H(n, 0..M-1) then g_0[n] ... g_{K-1}[n].
// With K and M fixed, the first N elements of a panel of N' > N elements
// match the N-element draw exactly. Every complex entry consumes two standard
// normals (real, imaginary) scaled by sqrt(PL / 2). See GaussianStream.
ChannelSet GenerateInstance(std::uint64_t seed, const SystemDims& dims, const Geometry& geometry,
                            const PathLossModel& path_loss);

ChannelSet FixedInstance(CMatrix H, std::vector<CRowVector> g, std::vector<UserSide> sides);

// Fixture format, one record per line, no header, 0-based indices:
//   H,<row>,<col>,<re>,<im>
//   g,<k>,<col>,<re>,<im>
//   label,<k>,<t|r>
// Blank lines and lines starting with '#' are skipped. Values are written
// with 17 significant digits, so a write/read cycle is exact.
void WriteChannelCsv(std::ostream& out, const ChannelSet& channels);
ChannelSet ReadChannelCsv(std::istream& in);

// Standard normals from std::mt19937_64 (bit-exact across conforming
// standard libraries). A 64-bit word w maps to u = ((w >> 11) + 1) * 2^-53 in
// (0, 1]; pairs (u1, u2) yield sqrt(-2 ln u1) * {cos, sin}(2 pi u2).
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

  double Next();
  double Uniform();
  Complex NextComplex(double variance);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace starris
