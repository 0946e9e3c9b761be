#include "lsvd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <tuple>

#include <json.hpp>

#include "lsvd/avi.hpp"
#include "lsvd/error.hpp"
#include "lsvd/subspace.hpp"
#include "lsvd/svd.hpp"
#include "parallel_for.hpp"

namespace lsvd {
namespace {

using ojson = nlohmann::ordered_json;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_opt(const std::optional<std::int64_t>& v) {
  return v ? std::to_string(*v) : std::string();
}

ojson json_opt(const std::optional<std::int64_t>& v) { return v ? ojson(*v) : ojson(nullptr); }

void require_sequence(std::span<const LatentTensor> latents, std::size_t minimum) {
  if (latents.size() < minimum) {
    throw ValidationError("need at least " + std::to_string(minimum) + " latents, got " +
                          std::to_string(latents.size()));
  }
  for (std::size_t i = 1; i < latents.size(); ++i) {
    if (!(latents[i].shape() == latents[0].shape())) {
      throw ValidationError("latent " + std::to_string(i) + " has shape " +
                            to_string(latents[i].shape()) + ", expected " +
                            to_string(latents[0].shape()));
    }
  }
}

std::pair<double, double> mean_variance(std::span<const double> v) {
  if (v.empty()) return {0.0, 0.0};
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / static_cast<double>(v.size());
  double sq = 0.0;
  for (double x : v) sq += (x - mean) * (x - mean);
  return {mean, sq / static_cast<double>(v.size())};
}

void theorem_channel(const Matrix& x, const Matrix& z, std::size_t k, TheoremNorm norm,
                     TheoremChannel& out) {
  const SvdTriple sx = svd(x);
  const SvdTriple sz = svd(z);
  const Matrix u_hat = build_attribute_bases(sx, sz, k, 1.0).U_hat;
  const Matrix to_x = u_hat - sx.U;
  const Matrix to_z = u_hat - sz.U;
  out.frobenius_to_x = frobenius_norm(to_x);
  out.frobenius_to_z = frobenius_norm(to_z);
  out.spectral_to_x = spectral_norm(to_x);
  out.spectral_to_z = spectral_norm(to_z);
  out.sigma_max_x = sx.S.front();
  out.sigma_max_z = sz.S.front();
  out.assumption_holds = out.sigma_max_x <= out.sigma_max_z;
  out.holds = norm == TheoremNorm::Frobenius ? out.frobenius_to_x <= out.frobenius_to_z
                                             : out.spectral_to_x <= out.spectral_to_z;
}

const char* norm_name(TheoremNorm n) { return n == TheoremNorm::Frobenius ? "frobenius" : "spectral"; }
const char* mode_name(GeodesicMode m) {
  return m == GeodesicMode::Consecutive ? "consecutive" : "against-first";
}
const char* side_name(SubspaceSide s) { return s == SubspaceSide::Left ? "left" : "right"; }
const char* method_name(MatchMethod m) { return m == MatchMethod::Greedy ? "greedy" : "hungarian"; }

// Minimum-cost assignment on a square matrix (shortest augmenting path,
// O(n^3)). Returns assignment[row] = column.
std::vector<std::size_t> hungarian_min(const Matrix& cost) {
  const std::size_t n = cost.rows();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<bool> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
  return assignment;
}

}  // namespace

TheoremReport verify_theorem(const LatentTensor& x, const LatentTensor& z, std::size_t k,
                             TheoremNorm norm) {
  const LatentPair pair{x, z};
  return verify_theorem(std::span<const LatentPair>(&pair, 1), k, norm);
}

TheoremReport verify_theorem(std::span<const LatentPair> corpus, std::size_t k, TheoremNorm norm) {
  if (corpus.empty()) throw ValidationError("theorem check needs at least one pair");
  const LatentShape shape = corpus.front().x.shape();
  for (std::size_t p = 0; p < corpus.size(); ++p) {
    if (!(corpus[p].x.shape() == shape) || !(corpus[p].z.shape() == shape)) {
      throw ValidationError("shape mismatch in pair " + std::to_string(p));
    }
  }
  if (shape.height != shape.width) {
    throw ValidationError("theorem check requires square channels, got " + to_string(shape));
  }
  AviConfig{k, 1.0, {}}.validate(shape.height);

  TheoremReport report;
  report.norm = norm;
  report.k = k;
  report.in_regime = 2 * k == shape.height;
  const std::size_t channels = shape.channels;
  report.channels.resize(corpus.size() * channels);
  detail::parallel_for(report.channels.size(), [&](std::size_t i) {
    const std::size_t p = i / channels;
    const std::size_t c = i % channels;
    TheoremChannel& out = report.channels[i];
    out.pair = p;
    out.channel = c;
    theorem_channel(corpus[p].x.channel(c), corpus[p].z.channel(c), k, norm, out);
  });
  std::size_t assumption = 0;
  for (const TheoremChannel& c : report.channels) {
    report.holds_count += c.holds ? 1 : 0;
    assumption += c.assumption_holds ? 1 : 0;
  }
  const auto total = static_cast<double>(report.channels.size());
  report.satisfaction_rate = static_cast<double>(report.holds_count) / total;
  report.assumption_rate = static_cast<double>(assumption) / total;
  return report;
}

Matrix leading_subspace(const Matrix& channel, std::size_t p, SubspaceSide side) {
  const SvdTriple t = svd(channel);
  if (side == SubspaceSide::Left) {
    if (p > t.U.cols()) throw ValidationError("subspace dimension exceeds channel height");
    return t.U.col_block(0, p);
  }
  if (p > t.V.rows()) throw ValidationError("subspace dimension exceeds channel width");
  return t.V.row_block(0, p).transposed();
}

GeodesicSeries geodesic_trajectory(std::span<const LatentTensor> latents, std::size_t p,
                                   GeodesicMode mode, SubspaceSide side) {
  require_sequence(latents, 2);
  const std::size_t channels = latents.front().shape().channels;
  if (p == 0) throw ValidationError("subspace dimension p must be positive");

  std::vector<Matrix> bases(latents.size() * channels);
  detail::parallel_for(bases.size(), [&](std::size_t i) {
    bases[i] = leading_subspace(latents[i / channels].channel(i % channels), p, side);
  });

  GeodesicSeries series;
  series.mode = mode;
  series.side = side;
  series.p = p;
  for (std::size_t t = 1; t < latents.size(); ++t) {
    GeodesicPoint point;
    point.from = mode == GeodesicMode::Consecutive ? t - 1 : 0;
    point.to = t;
    point.from_time_step = latents[point.from].meta().time_step;
    point.to_time_step = latents[point.to].meta().time_step;
    point.per_channel.resize(channels);
    series.points.push_back(std::move(point));
  }
  detail::parallel_for(series.points.size() * channels, [&](std::size_t i) {
    GeodesicPoint& point = series.points[i / channels];
    const std::size_t c = i % channels;
    point.per_channel[c] =
        geodesic_distance(bases[point.from * channels + c], bases[point.to * channels + c], p);
  });
  std::vector<double> all;
  for (GeodesicPoint& point : series.points) {
    std::tie(point.mean, point.variance) = mean_variance(point.per_channel);
    all.insert(all.end(), point.per_channel.begin(), point.per_channel.end());
  }
  std::tie(series.mean, series.variance) = mean_variance(all);
  return series;
}

std::vector<SvTraceStep> singular_value_trajectory(std::span<const LatentTensor> latents) {
  require_sequence(latents, 1);
  const std::size_t channels = latents.front().shape().channels;
  std::vector<SvTraceStep> trace(latents.size());
  for (std::size_t t = 0; t < latents.size(); ++t) {
    trace[t].index = t;
    trace[t].time_step = latents[t].meta().time_step;
    trace[t].values.resize(channels);
  }
  detail::parallel_for(latents.size() * channels, [&](std::size_t i) {
    trace[i / channels].values[i % channels] = svd(latents[i / channels].channel(i % channels)).S;
  });
  for (std::size_t t = 1; t < trace.size(); ++t) {
    trace[t].deltas.resize(channels);
    for (std::size_t c = 0; c < channels; ++c) {
      const Vector& cur = trace[t].values[c];
      const Vector& prev = trace[t - 1].values[c];
      Vector d(cur.size());
      for (std::size_t i = 0; i < cur.size(); ++i) d[i] = cur[i] - prev[i];
      trace[t].deltas[c] = std::move(d);
    }
  }
  return trace;
}

std::vector<std::size_t> match_vectors(const Matrix& scores, MatchMethod method) {
  const std::size_t n = scores.rows();
  if (scores.cols() != n) throw ValidationError("match_vectors needs a square score matrix");
  if (method == MatchMethod::Hungarian) return hungarian_min(-1.0 * scores);

  std::vector<std::tuple<double, std::size_t, std::size_t>> entries;
  entries.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) entries.emplace_back(scores(i, j), i, j);
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
    return std::get<2>(a) < std::get<2>(b);
  });
  std::vector<std::size_t> assignment(n, n);
  std::vector<bool> taken(n, false);
  std::size_t remaining = n;
  for (const auto& [score, i, j] : entries) {
    if (assignment[i] != n || taken[j]) continue;
    assignment[i] = j;
    taken[j] = true;
    if (--remaining == 0) break;
  }
  return assignment;
}

MobilityTrace mobility_trace(std::span<const LatentTensor> latents, MatchMethod method) {
  require_sequence(latents, 2);
  const std::size_t channels = latents.front().shape().channels;

  std::vector<Matrix> bases(latents.size() * channels);
  detail::parallel_for(bases.size(), [&](std::size_t i) {
    bases[i] = svd(latents[i / channels].channel(i % channels)).U;
  });

  MobilityTrace trace;
  trace.method = method;
  trace.channels.resize(channels);
  detail::parallel_for(channels, [&](std::size_t c) {
    ChannelMobility& cm = trace.channels[c];
    cm.channel = c;
    const std::size_t n = bases[c].cols();
    std::vector<std::size_t> rank(n);
    std::iota(rank.begin(), rank.end(), 0);
    cm.ranks.push_back(rank);
    for (std::size_t t = 0; t + 1 < latents.size(); ++t) {
      Matrix scores = multiply_tn(bases[t * channels + c], bases[(t + 1) * channels + c]);
      for (double& s : scores.values()) s = std::min(std::abs(s), 1.0);
      MobilityStep step;
      step.from = t;
      step.to = t + 1;
      step.permutation = match_vectors(scores, method);
      step.cosines.resize(n);
      for (std::size_t i = 0; i < n; ++i) step.cosines[i] = scores(i, step.permutation[i]);
      for (std::size_t i = 0; i < n; ++i) rank[i] = step.permutation[rank[i]];
      cm.ranks.push_back(rank);
      cm.steps.push_back(std::move(step));
    }
    cm.net_shift.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      cm.net_shift[i] = static_cast<long long>(rank[i]) - static_cast<long long>(i);
    }
  });
  return trace;
}

void write_csv(const TheoremReport& r, std::ostream& out) {
  out << "pair,channel,frobenius_to_x,frobenius_to_z,spectral_to_x,spectral_to_z,sigma_max_x,"
         "sigma_max_z,assumption_holds,holds\n";
  for (const TheoremChannel& c : r.channels) {
    out << c.pair << ',' << c.channel << ',' << fmt(c.frobenius_to_x) << ','
        << fmt(c.frobenius_to_z) << ',' << fmt(c.spectral_to_x) << ',' << fmt(c.spectral_to_z)
        << ',' << fmt(c.sigma_max_x) << ',' << fmt(c.sigma_max_z) << ','
        << (c.assumption_holds ? 1 : 0) << ',' << (c.holds ? 1 : 0) << '\n';
  }
}

void write_csv(const GeodesicSeries& s, std::ostream& out) {
  out << "from,to,from_time_step,to_time_step,channel,distance\n";
  for (const GeodesicPoint& p : s.points) {
    const std::string prefix = std::to_string(p.from) + ',' + std::to_string(p.to) + ',' +
                               fmt_opt(p.from_time_step) + ',' + fmt_opt(p.to_time_step) + ',';
    for (std::size_t c = 0; c < p.per_channel.size(); ++c)
      out << prefix << c << ',' << fmt(p.per_channel[c]) << '\n';
    out << prefix << "mean," << fmt(p.mean) << '\n';
  }
}

void write_csv(std::span<const SvTraceStep> trace, std::ostream& out) {
  out << "index,time_step,channel,rank,value,delta\n";
  for (const SvTraceStep& s : trace) {
    for (std::size_t c = 0; c < s.values.size(); ++c) {
      for (std::size_t r = 0; r < s.values[c].size(); ++r) {
        out << s.index << ',' << fmt_opt(s.time_step) << ',' << c << ',' << r << ','
            << fmt(s.values[c][r]) << ',' << (s.deltas.empty() ? std::string() : fmt(s.deltas[c][r]))
            << '\n';
      }
    }
  }
}

void write_csv(const MobilityTrace& t, std::ostream& out) {
  out << "channel,from,to,from_rank,to_rank,cosine\n";
  for (const ChannelMobility& cm : t.channels) {
    for (const MobilityStep& s : cm.steps) {
      for (std::size_t i = 0; i < s.permutation.size(); ++i) {
        out << cm.channel << ',' << s.from << ',' << s.to << ',' << i << ',' << s.permutation[i]
            << ',' << fmt(s.cosines[i]) << '\n';
      }
    }
  }
}

std::string to_json(const TheoremReport& r) {
  ojson j;
  j["norm"] = norm_name(r.norm);
  j["k"] = r.k;
  j["in_regime"] = r.in_regime;
  j["satisfaction_rate"] = r.satisfaction_rate;
  j["assumption_rate"] = r.assumption_rate;
  j["holds_count"] = r.holds_count;
  ojson rows = ojson::array();
  for (const TheoremChannel& c : r.channels) {
    rows.push_back({{"pair", c.pair},
                    {"channel", c.channel},
                    {"frobenius_to_x", c.frobenius_to_x},
                    {"frobenius_to_z", c.frobenius_to_z},
                    {"spectral_to_x", c.spectral_to_x},
                    {"spectral_to_z", c.spectral_to_z},
                    {"sigma_max_x", c.sigma_max_x},
                    {"sigma_max_z", c.sigma_max_z},
                    {"assumption_holds", c.assumption_holds},
                    {"holds", c.holds}});
  }
  j["channels"] = rows;
  return j.dump(2);
}

std::string to_json(const GeodesicSeries& s) {
  ojson j;
  j["mode"] = mode_name(s.mode);
  j["side"] = side_name(s.side);
  j["p"] = s.p;
  j["mean"] = s.mean;
  j["variance"] = s.variance;
  ojson points = ojson::array();
  for (const GeodesicPoint& p : s.points) {
    points.push_back({{"from", p.from},
                      {"to", p.to},
                      {"from_time_step", json_opt(p.from_time_step)},
                      {"to_time_step", json_opt(p.to_time_step)},
                      {"per_channel", p.per_channel},
                      {"mean", p.mean},
                      {"variance", p.variance}});
  }
  j["points"] = points;
  return j.dump(2);
}

std::string to_json(std::span<const SvTraceStep> trace) {
  ojson steps = ojson::array();
  for (const SvTraceStep& s : trace) {
    steps.push_back({{"index", s.index},
                     {"time_step", json_opt(s.time_step)},
                     {"values", s.values},
                     {"deltas", s.deltas}});
  }
  return ojson{{"steps", steps}}.dump(2);
}

std::string to_json(const MobilityTrace& t) {
  ojson channels = ojson::array();
  for (const ChannelMobility& cm : t.channels) {
    ojson steps = ojson::array();
    for (const MobilityStep& s : cm.steps) {
      steps.push_back({{"from", s.from},
                       {"to", s.to},
                       {"permutation", s.permutation},
                       {"cosines", s.cosines}});
    }
    channels.push_back({{"channel", cm.channel},
                        {"steps", steps},
                        {"ranks", cm.ranks},
                        {"net_shift", cm.net_shift}});
  }
  return ojson{{"method", method_name(t.method)}, {"channels", channels}}.dump(2);
}

std::string summary(const TheoremReport& r) {
  std::ostringstream s;
  s << "attribute-vector distance check (" << norm_name(r.norm) << " norm, k=" << r.k
    << (r.in_regime ? "" : ", outside k=N/2 regime") << ")\n";
  s << "  channels: " << r.channels.size() << ", inequality holds: " << r.holds_count
    << ", satisfaction rate: " << fmt(r.satisfaction_rate) << '\n';
  s << "  sigma_max(x) <= sigma_max(z) rate: " << fmt(r.assumption_rate) << '\n';
  return s.str();
}

std::string summary(const GeodesicSeries& g) {
  std::ostringstream s;
  s << "geodesic distance (" << mode_name(g.mode) << ", " << side_name(g.side)
    << " singular vectors, p=" << g.p << ")\n";
  for (const GeodesicPoint& p : g.points) {
    s << "  " << p.from << " -> " << p.to << ": mean " << fmt(p.mean) << ", variance "
      << fmt(p.variance) << '\n';
  }
  s << "  overall mean " << fmt(g.mean) << ", variance " << fmt(g.variance) << '\n';
  return s.str();
}

std::string summary(std::span<const SvTraceStep> trace) {
  std::ostringstream s;
  s << "singular value trace over " << trace.size() << " latents\n";
  for (const SvTraceStep& t : trace) {
    s << "  " << t.index << ':';
    for (std::size_t c = 0; c < t.values.size(); ++c) {
      s << " c" << c << " max " << fmt(t.values[c].front());
      if (!t.deltas.empty()) s << " (delta " << fmt(t.deltas[c].front()) << ')';
    }
    s << '\n';
  }
  return s.str();
}

std::string summary(const MobilityTrace& t) {
  std::ostringstream s;
  s << "singular vector order mobility (" << method_name(t.method) << " matching)\n";
  for (const ChannelMobility& cm : t.channels) {
    std::size_t moved = 0;
    long long largest = 0;
    for (long long shift : cm.net_shift) {
      moved += shift != 0 ? 1 : 0;
      largest = std::max(largest, shift < 0 ? -shift : shift);
    }
    s << "  channel " << cm.channel << ": " << moved << " vectors changed rank, largest shift "
      << largest << '\n';
  }
  return s.str();
}

}  // namespace lsvd
