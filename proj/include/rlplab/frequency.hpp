#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "signal.hpp"

namespace rlplab {

/// Half-open frequency block [a, b) in DFT bin units.
struct FrequencyInterval {
  long a = 0;
  long b = 1;

  long length() const { return b - a; }
  bool contains(long xi) const { return a <= xi && xi < b; }
  bool contains(const FrequencyInterval& o) const { return a <= o.a && o.b <= b; }

  friend bool operator==(const FrequencyInterval&, const FrequencyInterval&) = default;
  friend auto operator<=>(const FrequencyInterval&, const FrequencyInterval&) = default;
};

/// Maximum covering multiplicity over bins.
inline int overlap_constant(const std::vector<FrequencyInterval>& intervals) {
  if (intervals.empty()) throw std::invalid_argument("overlap_constant: empty list");
  long lo = intervals.front().a, hi = intervals.front().b;
  for (const auto& w : intervals) {
    if (w.a >= w.b) throw std::invalid_argument("overlap_constant: empty interval");
    lo = std::min(lo, w.a);
    hi = std::max(hi, w.b);
  }
  std::vector<int> diff(static_cast<std::size_t>(hi - lo + 1), 0);
  for (const auto& w : intervals) {
    ++diff[static_cast<std::size_t>(w.a - lo)];
    --diff[static_cast<std::size_t>(w.b - lo)];
  }
  int run = 0, best = 0;
  for (int d : diff) best = std::max(best, run += d);
  return best;
}

/// Frequency family on a grid of n bins with its exact overlap constant.
class IntervalFamily {
 public:
  IntervalFamily() = default;

  IntervalFamily(std::vector<FrequencyInterval> intervals, std::size_t n)
      : intervals_(std::move(intervals)), n_(n) {
    if (intervals_.empty()) throw std::invalid_argument("interval family must be nonempty");
    for (const auto& w : intervals_)
      if (w.a < 0 || w.a >= w.b || w.b > static_cast<long>(n_))
        throw std::invalid_argument("frequency interval outside [0, N)");
    overlap_ = overlap_constant(intervals_);
  }

  const std::vector<FrequencyInterval>& intervals() const { return intervals_; }
  std::size_t size() const { return intervals_.size(); }
  const FrequencyInterval& operator[](std::size_t k) const { return intervals_[k]; }
  std::size_t n() const { return n_; }
  int overlap_B() const { return overlap_; }

  /// L = max |omega_k|
  long max_length() const {
    long L = 0;
    for (const auto& w : intervals_) L = std::max(L, w.length());
    return L;
  }

 private:
  std::vector<FrequencyInterval> intervals_;
  std::size_t n_ = 0;
  int overlap_ = 0;
};

/// Maximal dyadic J in [a, b) with dist(J, a) >= |J| and dist(J, b) >= |J|.
/// Blocks shorter than 4 bins are returned unchanged.
inline std::vector<FrequencyInterval> whitney(const FrequencyInterval& w) {
  if (w.a >= w.b) throw std::invalid_argument("whitney: empty interval");
  if (w.length() < 4) return {w};
  auto admissible = [&](long lo, long len) { return lo - w.a >= len && w.b - (lo + len) >= len; };
  std::vector<FrequencyInterval> out;
  long x = w.a + 1;
  const long last = w.b - 2;
  while (x <= last) {
    long len = 1;
    while (true) {
      const long next = len * 2;
      const long lo = x - (((x % next) + next) % next);
      if (!admissible(lo, next)) break;
      len = next;
    }
    const long lo = x - (((x % len) + len) % len);
    out.push_back({lo, lo + len});
    x = lo + len;
  }
  return out;
}

/// Aligned dyadic pieces exactly partitioning [a, b), coarsest first from the left.
inline std::vector<FrequencyInterval> dyadic_pieces(const FrequencyInterval& w) {
  std::vector<FrequencyInterval> out;
  long x = w.a;
  while (x < w.b) {
    long len = 1;
    while (x % (len * 2) == 0 && x + len * 2 <= w.b) len *= 2;
    out.push_back({x, x + len});
    x += len;
  }
  return out;
}

/// Frequency pieces that carry tiles: the Whitney pieces plus the two endpoint
/// unit bins, or the aligned dyadic pieces for blocks shorter than 4 bins.
inline std::vector<FrequencyInterval> whitney_tiling(const FrequencyInterval& w) {
  if (w.length() < 4) return dyadic_pieces(w);
  std::vector<FrequencyInterval> out;
  out.push_back({w.a, w.a + 1});
  for (const auto& j : whitney(w)) out.push_back(j);
  out.push_back({w.b - 1, w.b});
  return out;
}

/// {[lambda^k, lambda^{k+1}) ∩ [1, N/2)}
inline IntervalFamily make_lacunary(long lambda, std::size_t n) {
  if (lambda < 2) throw std::invalid_argument("make_lacunary: lambda must be >= 2");
  const long top = static_cast<long>(n / 2);
  std::vector<FrequencyInterval> out;
  for (long lo = 1; lo < top; lo *= lambda) out.push_back({lo, std::min(lo * lambda, top)});
  return IntervalFamily(std::move(out), n);
}

inline IntervalFamily make_unit(std::size_t n) {
  std::vector<FrequencyInterval> out;
  for (long k = 0; k < static_cast<long>(n); ++k) out.push_back({k, k + 1});
  return IntervalFamily(std::move(out), n);
}

/// Splits omega_k into pieces[k] equal blocks.
inline IntervalFamily make_congruent(const IntervalFamily& base, const std::vector<long>& pieces) {
  if (pieces.size() != base.size())
    throw std::invalid_argument("make_congruent: one piece count per interval required");
  std::vector<FrequencyInterval> out;
  for (std::size_t k = 0; k < base.size(); ++k) {
    const auto& w = base[k];
    const long m = pieces[k];
    if (m < 1 || w.length() % m != 0)
      throw std::invalid_argument("make_congruent: piece count does not divide interval " +
                                  std::to_string(k));
    const long step = w.length() / m;
    for (long j = 0; j < m; ++j) out.push_back({w.a + j * step, w.a + (j + 1) * step});
  }
  return IntervalFamily(std::move(out), base.n());
}

/// Consecutive blocks of m bins covering [0, N).
inline IntervalFamily make_blocks(long m, std::size_t n) {
  if (m < 1 || static_cast<long>(n) % m != 0) throw std::invalid_argument("make_blocks: m must divide N");
  std::vector<FrequencyInterval> out;
  for (long a = 0; a < static_cast<long>(n); a += m) out.push_back({a, a + m});
  return IntervalFamily(std::move(out), n);
}

/// {[0,1), [1,2), [2,4), ..., [N/2, N)}
inline IntervalFamily make_dyadic(std::size_t n) {
  std::vector<FrequencyInterval> out{{0, 1}};
  for (long a = 1; a < static_cast<long>(n); a *= 2) out.push_back({a, 2 * a});
  return IntervalFamily(std::move(out), n);
}

inline IntervalFamily make_full(std::size_t n) {
  return IntervalFamily({{0, static_cast<long>(n)}}, n);
}

inline void write_family(std::ostream& os, const IntervalFamily& fam) {
  for (const auto& w : fam.intervals()) os << w.a << ' ' << w.b << '\n';
}

inline IntervalFamily read_family(std::istream& is, std::size_t n) {
  std::vector<FrequencyInterval> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    FrequencyInterval w;
    if (!(ls >> w.a >> w.b)) throw std::runtime_error("family file: bad line '" + line + "'");
    out.push_back(w);
  }
  return IntervalFamily(std::move(out), n);
}

namespace detail {
inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}
}  // namespace detail

/// lacunary:L | unit | congruent:L:n1,n2,... | congruent:L:unit | blocks:m | dyadic | full | file:path
inline IntervalFamily parse_family(const std::string& spec, std::size_t n) {
  const auto parts = detail::split(spec, ':');
  if (parts.empty()) throw std::invalid_argument("empty family spec");
  const std::string& kind = parts[0];
  if (kind == "unit") return make_unit(n);
  if (kind == "dyadic") return make_dyadic(n);
  if (kind == "full") return make_full(n);
  if (kind == "lacunary") return make_lacunary(parts.size() > 1 ? std::stol(parts[1]) : 2, n);
  if (kind == "blocks" && parts.size() == 2) return make_blocks(std::stol(parts[1]), n);
  if (kind == "file" && parts.size() >= 2) {
    const std::string path = spec.substr(5);
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open family file " + path);
    return read_family(in, n);
  }
  if (kind == "congruent" && parts.size() == 3) {
    const auto base = make_lacunary(std::stol(parts[1]), n);
    std::vector<long> pieces;
    if (parts[2] == "unit") {
      for (const auto& w : base.intervals()) pieces.push_back(w.length());
    } else {
      for (const auto& t : detail::split(parts[2], ',')) pieces.push_back(std::stol(t));
      if (pieces.size() > base.size()) throw std::invalid_argument("congruent: too many piece counts");
      pieces.resize(base.size(), 1);
    }
    return make_congruent(base, pieces);
  }
  throw std::invalid_argument("unknown family spec '" + spec + "'");
}

}  // namespace rlplab
