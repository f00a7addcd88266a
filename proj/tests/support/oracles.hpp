#pragma once

// Independent reference implementations used only by tests. These stay
// deliberately naive (O(n^2) pair scans, full n-gram enumeration,
// exhaustive subset search) so they share no code path with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace oracles {

struct BruteTau {
  std::optional<double> value;
  long long concordant = 0;
  long long discordant = 0;
  long long ties_gold_only = 0;
  long long ties_hyp_only = 0;
  long long ties_both = 0;
};

// Classifies every pair explicitly.
inline BruteTau kendall_tau_b(const std::vector<double>& hyp, const std::vector<double>& gold) {
  BruteTau r;
  const std::size_t n = hyp.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dh = hyp[i] - hyp[j];
      const double dg = gold[i] - gold[j];
      if (dh == 0.0 && dg == 0.0) {
        ++r.ties_both;
      } else if (dh == 0.0) {
        ++r.ties_hyp_only;
      } else if (dg == 0.0) {
        ++r.ties_gold_only;
      } else if ((dh > 0.0) == (dg > 0.0)) {
        ++r.concordant;
      } else {
        ++r.discordant;
      }
    }
  }
  const long long den_g = r.concordant + r.discordant + r.ties_gold_only;
  const long long den_h = r.concordant + r.discordant + r.ties_hyp_only;
  if (den_g > 0 && den_h > 0) {
    r.value = static_cast<double>(r.concordant - r.discordant) /
              std::sqrt(static_cast<double>(den_g) * static_cast<double>(den_h));
  }
  return r;
}

// Textbook two-pass Pearson with plain double accumulation.
inline std::optional<double> pearson(const std::vector<double>& x,
                                     const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

// chrF by explicit n-gram multiset enumeration over UTF-32 code points.
// Whitespace (the common ASCII + Unicode space list) is removed first.
inline std::optional<double> chrf(const std::u32string& hyp_raw, const std::u32string& ref_raw,
                                  int max_n = 6, double beta = 2.0) {
  auto strip = [](const std::u32string& s) {
    static const std::vector<char32_t> ws = {
        0x09, 0x0A, 0x0B, 0x0C, 0x0D, 0x20, 0x85, 0xA0, 0x1680, 0x2000, 0x2001,
        0x2002, 0x2003, 0x2004, 0x2005, 0x2006, 0x2007, 0x2008, 0x2009, 0x200A,
        0x2028, 0x2029, 0x202F, 0x205F, 0x3000};
    std::u32string out;
    for (char32_t c : s) {
      if (std::find(ws.begin(), ws.end(), c) == ws.end()) out.push_back(c);
    }
    return out;
  };
  const std::u32string hyp = strip(hyp_raw);
  const std::u32string ref = strip(ref_raw);
  if (hyp.empty() && ref.empty()) return std::nullopt;
  if (hyp.empty() || ref.empty()) return 0.0;

  double psum = 0.0, rsum = 0.0;
  int orders = 0;
  for (int n = 1; n <= max_n; ++n) {
    if (static_cast<int>(ref.size()) < n) continue;
    std::map<std::u32string, long long> hyp_grams, ref_grams;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= hyp.size(); ++i)
      ++hyp_grams[hyp.substr(i, static_cast<std::size_t>(n))];
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= ref.size(); ++i)
      ++ref_grams[ref.substr(i, static_cast<std::size_t>(n))];
    long long overlap = 0;
    long long hyp_total = 0, ref_total = 0;
    for (const auto& [g, c] : hyp_grams) {
      hyp_total += c;
      auto it = ref_grams.find(g);
      if (it != ref_grams.end()) overlap += std::min(c, it->second);
    }
    for (const auto& [g, c] : ref_grams) ref_total += c;
    psum += hyp_total > 0 ? static_cast<double>(overlap) / static_cast<double>(hyp_total) : 0.0;
    rsum += static_cast<double>(overlap) / static_cast<double>(ref_total);
    ++orders;
  }
  if (orders == 0) return 0.0;
  const double p = psum / orders;
  const double r = rsum / orders;
  const double b2 = beta * beta;
  if (b2 * p + r == 0.0) return 0.0;
  return 100.0 * (1.0 + b2) * p * r / (b2 * p + r);
}

// Every size-B subset of items, via bitmask enumeration. Usable up to ~20.
inline std::vector<std::vector<std::size_t>> subsets_of_size(std::size_t n, std::size_t b) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> current;
  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    if (current.size() == b) {
      out.push_back(current);
      return;
    }
    for (std::size_t i = start; i < n; ++i) {
      current.push_back(i);
      rec(i + 1);
      current.pop_back();
    }
  };
  rec(0);
  return out;
}

}  // namespace oracles
