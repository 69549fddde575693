#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace kf {

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

// 64-bit FNV-1a, used for grid/config hashes embedded in outputs
class Hasher {
 public:
  Hasher& bytes(const void* p, std::size_t n);
  Hasher& add(double x) { return bytes(&x, sizeof x); }
  Hasher& add(std::int64_t x) { return bytes(&x, sizeof x); }
  Hasher& add(const std::string& s) { return bytes(s.data(), s.size()); }
  std::uint64_t value() const { return h_; }
  std::string hex() const;

 private:
  std::uint64_t h_ = 1469598103934665603ULL;
};

struct LinearFit {
  double slope = 0, intercept = 0, r2 = 0;
};
// least squares y = slope*x + intercept
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

double wall_seconds();

const char* version_string();

}  // namespace kf
