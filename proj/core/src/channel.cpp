#include "starris/channel.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

namespace starris {

Geometry Geometry::Circle(int num_users, const Vec3& center, double radius) {
  Geometry geo;
  geo.user_positions.reserve(num_users);
  for (int k = 0; k < num_users; ++k) {
    const double angle = kTwoPi * (k + 0.25) / num_users;
    geo.user_positions.push_back(center + radius * Vec3{std::cos(angle), std::sin(angle), 0.0});
  }
  return geo;
}

void Geometry::Validate() const {
  if (!bs_position.allFinite() || !ris_position.allFinite() || !ris_plane_normal.allFinite()) {
    throw ContractError("Geometry: non-finite coordinates");
  }
  if (std::abs(ris_plane_normal.norm() - 1.0) > 1e-12) {
    throw ContractError("Geometry: RIS plane normal must have unit length");
  }
  for (const auto& u : user_positions) {
    if (!u.allFinite()) throw ContractError("Geometry: non-finite user position");
  }
}

double PathLossModel::Gain(double distance_m) const {
  return std::pow(10.0, -ref_loss_db / 10.0) * std::pow(distance_m, -exponent);
}

UserSide ClassifySide(const Geometry& geometry, const Vec3& user) {
  return (user - geometry.ris_position).dot(geometry.ris_plane_normal) >= 0.0
             ? UserSide::kReflection
             : UserSide::kTransmission;
}

double GaussianStream::Uniform() {
  return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
}

double GaussianStream::Next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = Uniform();
  const double u2 = Uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(kTwoPi * u2);
  has_spare_ = true;
  return r * std::cos(kTwoPi * u2);
}

Complex GaussianStream::NextComplex(double variance) {
  const double s = std::sqrt(variance / 2.0);
  const double re = Next();
  const double im = Next();
  return {s * re, s * im};
}

ChannelSet GenerateInstance(std::uint64_t seed, const SystemDims& dims, const Geometry& geometry,
                            const PathLossModel& path_loss) {
  dims.Validate();
  geometry.Validate();
  if (static_cast<int>(geometry.user_positions.size()) != dims.num_users) {
    throw ContractError("GenerateInstance: geometry has a different number of users");
  }
  const double d_bs = (geometry.ris_position - geometry.bs_position).norm();
  if (!(d_bs > 0.0)) throw ContractError("GenerateInstance: BS coincides with RIS");

  std::vector<double> pl_user(dims.num_users);
  ChannelSet ch;
  for (int k = 0; k < dims.num_users; ++k) {
    const Vec3& u = geometry.user_positions[k];
    const double d = (u - geometry.ris_position).norm();
    if (!(d > 0.0)) {
      throw ContractError("GenerateInstance: user " + std::to_string(k) + " sits on the RIS");
    }
    pl_user[k] = path_loss.Gain(d);
    ch.g.emplace_back(dims.num_ris_elements);
    ch.sides.push_back(ClassifySide(geometry, u));
  }

  GaussianStream rng(seed);
  ch.H.resize(dims.num_ris_elements, dims.num_bs_antennas);
  const double pl_bs = path_loss.Gain(d_bs);
  // Element-major so a larger panel extends a smaller one under the same seed.
  for (int n = 0; n < dims.num_ris_elements; ++n) {
    for (int m = 0; m < dims.num_bs_antennas; ++m) ch.H(n, m) = rng.NextComplex(pl_bs);
    for (int k = 0; k < dims.num_users; ++k) ch.g[k][n] = rng.NextComplex(pl_user[k]);
  }
  return ch;
}

ChannelSet FixedInstance(CMatrix H, std::vector<CRowVector> g, std::vector<UserSide> sides) {
  ChannelSet ch{std::move(H), std::move(g), std::move(sides)};
  ch.Validate(ch.Dims());
  return ch;
}

namespace {

std::string FormatDouble(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

int ParseIndex(const std::string& s, int line_no) {
  std::size_t pos = 0;
  int value = 0;
  try {
    value = std::stoi(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || value < 0) {
    throw ContractError("channel CSV line " + std::to_string(line_no) + ": bad index '" + s + "'");
  }
  return value;
}

double ParseValue(const std::string& s, int line_no) {
  std::size_t pos = 0;
  double value = 0.0;
  try {
    value = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty()) {
    throw ContractError("channel CSV line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
  return value;
}

}  // namespace

void WriteChannelCsv(std::ostream& out, const ChannelSet& channels) {
  for (Eigen::Index n = 0; n < channels.H.rows(); ++n) {
    for (Eigen::Index m = 0; m < channels.H.cols(); ++m) {
      out << "H," << n << ',' << m << ',' << FormatDouble(channels.H(n, m).real()) << ','
          << FormatDouble(channels.H(n, m).imag()) << '\n';
    }
  }
  for (std::size_t k = 0; k < channels.g.size(); ++k) {
    for (Eigen::Index n = 0; n < channels.g[k].size(); ++n) {
      out << "g," << k << ',' << n << ',' << FormatDouble(channels.g[k][n].real()) << ','
          << FormatDouble(channels.g[k][n].imag()) << '\n';
    }
  }
  for (std::size_t k = 0; k < channels.sides.size(); ++k) {
    out << "label," << k << ',' << ToString(channels.sides[k]) << '\n';
  }
}

ChannelSet ReadChannelCsv(std::istream& in) {
  std::map<std::pair<int, int>, Complex> h_entries;
  std::map<std::pair<int, int>, Complex> g_entries;
  std::map<int, UserSide> labels;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto f = SplitCsv(line);
    if (f[0] == "H" || f[0] == "g") {
      if (f.size() != 5) {
        throw ContractError("channel CSV line " + std::to_string(line_no) + ": expected 5 fields");
      }
      const std::pair<int, int> key{ParseIndex(f[1], line_no), ParseIndex(f[2], line_no)};
      const Complex value{ParseValue(f[3], line_no), ParseValue(f[4], line_no)};
      auto& target = f[0] == "H" ? h_entries : g_entries;
      if (!target.emplace(key, value).second) {
        throw ContractError("channel CSV line " + std::to_string(line_no) + ": duplicate entry");
      }
    } else if (f[0] == "label") {
      if (f.size() != 3 || (f[2] != "t" && f[2] != "r")) {
        throw ContractError("channel CSV line " + std::to_string(line_no) + ": bad label record");
      }
      labels[ParseIndex(f[1], line_no)] =
          f[2] == "t" ? UserSide::kTransmission : UserSide::kReflection;
    } else {
      throw ContractError("channel CSV line " + std::to_string(line_no) + ": unknown record '" +
                          f[0] + "'");
    }
  }
  if (h_entries.empty() || g_entries.empty()) throw ContractError("channel CSV: missing H or g");

  int rows = 0, cols = 0, users = 0, g_cols = 0;
  for (const auto& [key, _] : h_entries) {
    rows = std::max(rows, key.first + 1);
    cols = std::max(cols, key.second + 1);
  }
  for (const auto& [key, _] : g_entries) {
    users = std::max(users, key.first + 1);
    g_cols = std::max(g_cols, key.second + 1);
  }
  if (static_cast<int>(h_entries.size()) != rows * cols) {
    throw ContractError("channel CSV: H is not fully specified");
  }
  if (static_cast<int>(g_entries.size()) != users * g_cols) {
    throw ContractError("channel CSV: g is not fully specified");
  }
  if (g_cols != rows) throw ContractError("channel CSV: g and H disagree on N");
  if (static_cast<int>(labels.size()) != users || labels.rbegin()->first != users - 1) {
    throw ContractError("channel CSV: need exactly one label per user");
  }

  CMatrix H(rows, cols);
  for (const auto& [key, value] : h_entries) H(key.first, key.second) = value;
  std::vector<CRowVector> g(users, CRowVector(g_cols));
  for (const auto& [key, value] : g_entries) g[key.first][key.second] = value;
  std::vector<UserSide> sides;
  for (const auto& [_, side] : labels) sides.push_back(side);
  return FixedInstance(std::move(H), std::move(g), std::move(sides));
}

}  // namespace starris
