// Copyright 2026 The obsint Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "obsint/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "obsint/preintegration.hpp"

namespace obsint {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

void eval_axis(const std::vector<Sinusoid>& terms, double t, double& val,
               double& d1, double& d2) {
  val = d1 = d2 = 0.0;
  for (const Sinusoid& s : terms) {
    const double w = kTwoPi * s.freq_hz;
    const double arg = w * t + s.phase;
    val += s.amp * std::sin(arg);
    d1 += s.amp * w * std::cos(arg);
    d2 -= s.amp * w * w * std::sin(arg);
  }
}

}  // namespace

TrajectoryPoint eval_trajectory(const TrajectorySpec& spec, double t) {
  TrajectoryPoint out;
  Vec3 theta, theta_dot;
  for (int axis = 0; axis < 3; ++axis) {
    double val, d1, d2;
    eval_axis(spec.position[axis], t, val, d1, d2);
    out.p[axis] = val;
    out.v[axis] = d1;
    out.a[axis] = d2;
    double av, ad1, ad2;
    eval_axis(spec.attitude[axis], t, av, ad1, ad2);
    theta[axis] = av;
    theta_dot[axis] = ad1;
  }
  out.q = so3::exp(theta);
  // body rate of R(t) = Exp(theta(t))
  out.omega_body = so3::right_jacobian(theta) * theta_dot;
  return out;
}

Dataset simulate(const TrajectorySpec& spec, const ImuIntrinsics& intr,
                 const GravityModel& gravity, SimTruth* truth) {
  Dataset ds;
  ds.meta.gravity = gravity;
  ds.meta.imu_rate_hz = spec.imu_rate;
  ds.meta.provenance = "simulate";
  ds.meta.t0_ns = 0;

  const double dt = 1.0 / spec.imu_rate;
  const auto n = static_cast<std::size_t>(
      std::floor(spec.duration * spec.imu_rate)) + 1;

  Rng rng(spec.seed);
  BiasState bias{intr.initial_bg, intr.initial_ba};

  ds.imu.reserve(n);
  ds.gt.reserve(n);
  if (truth != nullptr) {
    truth->clean.clear();
    truth->bg.clear();
    truth->ba.clear();
  }

  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    const TrajectoryPoint pt = eval_trajectory(spec, t);

    GtState gt;
    gt.t = t;
    gt.q = pt.q;
    gt.p = pt.p;
    gt.v = pt.v;
    gt.has_v = true;
    ds.gt.push_back(gt);

    const Vec3 body_accel = true_body_accel(pt.q, pt.a, gravity);
    if (truth != nullptr) {
      ImuSample clean;
      clean.t = t;
      clean.omega = pt.omega_body;
      clean.accel = body_accel;
      truth->clean.push_back(clean);
      truth->bg.push_back(bias.bg);
      truth->ba.push_back(bias.ba);
    }
    ds.imu.push_back(corrupt(t, pt.omega_body, body_accel, intr, bias, rng, dt));
  }
  return ds;
}

namespace {

// '#' always marks a header; a bare "timestamp,..." style header is only
// accepted as the first line, so malformed data rows still error out with
// their line number.
bool looks_like_header(const std::string& line, bool first_line) {
  for (char ch : line) {
    if (ch == '#') return true;
    if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '-' || ch == '+')
      return false;
    if (!std::isspace(static_cast<unsigned char>(ch))) return first_line;
  }
  return true;  // blank-ish
}

std::vector<double> parse_row(const std::string& line, const std::string& path,
                              std::size_t lineno, std::size_t min_cols) {
  std::vector<double> vals;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (cell.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::size_t pos = 0;
    double v;
    try {
      v = std::stod(cell, &pos);
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": malformed value '" + cell + "'");
    }
    if (cell.find_first_not_of(" \t\r\n", pos) != std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": malformed value '" + cell + "'");
    }
    vals.push_back(v);
  }
  if (vals.size() < min_cols) {
    throw std::runtime_error(path + ":" + std::to_string(lineno) +
                             ": expected >= " + std::to_string(min_cols) +
                             " columns, got " + std::to_string(vals.size()));
  }
  return vals;
}

// Timestamps are parsed as int64 nanoseconds and rebased so the relative
// double seconds stay exact at ns resolution.
std::int64_t parse_ts_ns(const std::string& line, const std::string& path,
                         std::size_t lineno) {
  const auto comma = line.find(',');
  const std::string cell = line.substr(0, comma);
  try {
    return std::stoll(cell);
  } catch (const std::exception&) {
    throw std::runtime_error(path + ":" + std::to_string(lineno) +
                             ": malformed timestamp '" + cell + "'");
  }
}

struct RawRows {
  std::vector<std::int64_t> ts;
  std::vector<std::vector<double>> vals;
};

RawRows read_csv(const std::string& path, std::size_t min_cols) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  RawRows rows;
  std::string line;
  std::size_t lineno = 0;
  bool seen_data = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    if (looks_like_header(line, !seen_data)) continue;
    seen_data = true;
    rows.ts.push_back(parse_ts_ns(line, path, lineno));
    rows.vals.push_back(parse_row(line, path, lineno, min_cols));
  }
  return rows;
}

}  // namespace

Dataset load_euroc_csv(const std::string& imu_path,
                       const std::string& gt_path) {
  RawRows imu_rows = read_csv(imu_path, 7);
  RawRows gt_rows = read_csv(gt_path, 8);
  if (imu_rows.ts.empty()) throw std::runtime_error(imu_path + ": no data rows");
  if (gt_rows.ts.empty()) throw std::runtime_error(gt_path + ": no data rows");

  Dataset ds;
  ds.meta.provenance = imu_path;
  ds.meta.t0_ns = std::min(*std::min_element(imu_rows.ts.begin(), imu_rows.ts.end()),
                           *std::min_element(gt_rows.ts.begin(), gt_rows.ts.end()));

  const auto to_rel_s = [&](std::int64_t ns) {
    return static_cast<double>(ns - ds.meta.t0_ns) * 1e-9;
  };

  std::vector<std::size_t> order(imu_rows.ts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return imu_rows.ts[a] < imu_rows.ts[b];
  });
  std::int64_t last_ts = -1;
  for (std::size_t idx : order) {
    if (imu_rows.ts[idx] == last_ts) {
      ++ds.meta.dropped_duplicates;
      continue;
    }
    last_ts = imu_rows.ts[idx];
    const auto& v = imu_rows.vals[idx];
    ImuSample s;
    s.t = to_rel_s(imu_rows.ts[idx]);
    s.omega = Vec3(v[1], v[2], v[3]);
    s.accel = Vec3(v[4], v[5], v[6]);
    ds.imu.push_back(s);
  }

  order.resize(gt_rows.ts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return gt_rows.ts[a] < gt_rows.ts[b];
  });
  last_ts = -1;
  for (std::size_t idx : order) {
    if (gt_rows.ts[idx] == last_ts) {
      ++ds.meta.dropped_duplicates;
      continue;
    }
    last_ts = gt_rows.ts[idx];
    const auto& v = gt_rows.vals[idx];
    GtState g;
    g.t = to_rel_s(gt_rows.ts[idx]);
    g.p = Vec3(v[1], v[2], v[3]);
    g.q = Quat(v[4], v[5], v[6], v[7]);
    g.q.normalize();
    if (v.size() >= 11) {
      g.v = Vec3(v[8], v[9], v[10]);
      g.has_v = true;
    }
    ds.gt.push_back(g);
  }

  if (ds.imu.size() >= 2) {
    const double span = ds.imu.back().t - ds.imu.front().t;
    ds.meta.imu_rate_hz = static_cast<double>(ds.imu.size() - 1) / span;
  }
  return ds;
}

void save_euroc_csv(const Dataset& ds, const std::string& imu_path,
                    const std::string& gt_path) {
  const auto to_ns = [&](double t) {
    return ds.meta.t0_ns + static_cast<std::int64_t>(std::llround(t * 1e9));
  };
  {
    std::ofstream out(imu_path);
    if (!out) throw std::runtime_error("cannot write " + imu_path);
    out << "#timestamp [ns],w_x [rad s^-1],w_y [rad s^-1],w_z [rad s^-1],"
           "a_x [m s^-2],a_y [m s^-2],a_z [m s^-2]\n";
    char buf[512];
    for (const ImuSample& s : ds.imu) {
      std::snprintf(buf, sizeof(buf),
                    "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                    static_cast<long long>(to_ns(s.t)), s.omega.x(),
                    s.omega.y(), s.omega.z(), s.accel.x(), s.accel.y(),
                    s.accel.z());
      out << buf;
    }
  }
  {
    std::ofstream out(gt_path);
    if (!out) throw std::runtime_error("cannot write " + gt_path);
    out << "#timestamp [ns],p_x [m],p_y [m],p_z [m],q_w,q_x,q_y,q_z,"
           "v_x [m s^-1],v_y [m s^-1],v_z [m s^-1]\n";
    char buf[768];
    for (const GtState& g : ds.gt) {
      std::snprintf(
          buf, sizeof(buf),
          "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
          static_cast<long long>(to_ns(g.t)), g.p.x(), g.p.y(), g.p.z(),
          g.q.w(), g.q.x(), g.q.y(), g.q.z(), g.v.x(), g.v.y(), g.v.z());
      out << buf;
    }
  }
}

std::vector<Vec3> derive_velocity(const std::vector<GtState>& gt) {
  if (gt.size() < 3) {
    throw std::invalid_argument("derive_velocity: need >= 3 poses");
  }
  const std::size_t n = gt.size();
  std::vector<Vec3> v(n);

  bool uniform = true;
  const double h = gt[1].t - gt[0].t;
  for (std::size_t i = 1; i + 1 < n && uniform; ++i) {
    uniform = std::abs((gt[i + 1].t - gt[i].t) - h) <= 1e-9 * std::abs(h);
  }

  if (uniform && n >= 5) {
    // fourth-order central stencil inside, third-order one-sided at the edges
    const auto one_sided = [&](std::size_t i, int dir) {
      return static_cast<double>(dir) / (6.0 * h) *
             (-11.0 * gt[i].p + 18.0 * gt[i + dir].p - 9.0 * gt[i + 2 * dir].p +
              2.0 * gt[i + 3 * dir].p);
    };
    v[0] = one_sided(0, 1);
    v[1] = one_sided(1, 1);
    for (std::size_t i = 2; i + 2 < n; ++i) {
      v[i] = (gt[i - 2].p - 8.0 * gt[i - 1].p + 8.0 * gt[i + 1].p -
              gt[i + 2].p) /
             (12.0 * h);
    }
    v[n - 2] = one_sided(n - 2, -1);
    v[n - 1] = one_sided(n - 1, -1);
    return v;
  }

  v[0] = (gt[1].p - gt[0].p) / (gt[1].t - gt[0].t);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    v[i] = (gt[i + 1].p - gt[i - 1].p) / (gt[i + 1].t - gt[i - 1].t);
  }
  v[n - 1] = (gt[n - 1].p - gt[n - 2].p) / (gt[n - 1].t - gt[n - 2].t);
  return v;
}

Dataset align_ground_truth(const Dataset& ds) {
  if (ds.gt.size() < 2) {
    throw std::invalid_argument("align_ground_truth: need >= 2 gt states");
  }
  Dataset out;
  out.meta = ds.meta;

  std::vector<GtState> gt = ds.gt;
  if (!gt.front().has_v) {
    const std::vector<Vec3> v = derive_velocity(gt);
    for (std::size_t i = 0; i < gt.size(); ++i) {
      gt[i].v = v[i];
      gt[i].has_v = true;
    }
  }

  const double t_lo = gt.front().t;
  const double t_hi = gt.back().t;
  std::size_t seg = 0;
  for (const ImuSample& s : ds.imu) {
    if (s.t < t_lo || s.t > t_hi) continue;
    while (seg + 2 < gt.size() && gt[seg + 1].t < s.t) ++seg;
    const GtState& a = gt[seg];
    const GtState& b = gt[seg + 1];
    const double u = (s.t - a.t) / (b.t - a.t);
    GtState g;
    g.t = s.t;
    g.p = (1.0 - u) * a.p + u * b.p;
    g.v = (1.0 - u) * a.v + u * b.v;
    g.q = so3::slerp(a.q, b.q, u);
    g.has_v = true;
    out.gt.push_back(g);
    out.imu.push_back(s);
  }
  if (out.imu.empty()) {
    throw std::runtime_error(
        "align_ground_truth: no overlap between imu and ground truth");
  }
  return out;
}

ImuState gt_to_state(const GtState& g) {
  ImuState s;
  s.q = g.q;
  s.p = g.p;
  s.v = g.v;
  return s;
}

std::pair<std::size_t, std::size_t> SplitRegions::of(Split s) const {
  switch (s) {
    case Split::kTrain:
      return {train_begin, train_end};
    case Split::kVal:
      return {val_begin, val_end};
    case Split::kTest:
      return {test_begin, test_end};
  }
  return {0, 0};
}

SplitRegions split_regions(std::size_t n, const WindowingConfig& cfg) {
  const auto len = static_cast<std::size_t>(cfg.window_len);
  const auto n_train = static_cast<std::size_t>(cfg.train_frac * n);
  const auto n_val = static_cast<std::size_t>(cfg.val_frac * n);
  SplitRegions r;
  r.train_begin = 0;
  r.train_end = std::min(n, n_train);
  r.val_begin = std::min(n, n_train + len);
  r.val_end = std::min(n, n_train + len + n_val);
  r.test_begin = std::min(n, n_train + 2 * len + n_val);
  r.test_end = n;
  return r;
}

Dataset slice_dataset(const Dataset& aligned, std::size_t begin,
                      std::size_t end) {
  if (aligned.gt.size() != aligned.imu.size()) {
    throw std::invalid_argument("slice_dataset: dataset is not aligned");
  }
  if (begin >= end || end > aligned.imu.size()) {
    throw std::invalid_argument("slice_dataset: empty or out-of-range slice");
  }
  Dataset out;
  out.meta = aligned.meta;
  out.imu.assign(aligned.imu.begin() + begin, aligned.imu.begin() + end);
  out.gt.assign(aligned.gt.begin() + begin, aligned.gt.begin() + end);
  return out;
}

std::vector<TrainingWindow> make_windows(const Dataset& aligned,
                                         const WindowingConfig& cfg, Rng& rng) {
  const std::size_t n = aligned.imu.size();
  const auto len = static_cast<std::size_t>(cfg.window_len);
  if (n < len) {
    throw std::invalid_argument("make_windows: dataset shorter than one window");
  }
  if (aligned.gt.size() != n) {
    throw std::invalid_argument("make_windows: dataset is not aligned");
  }

  struct Region {
    std::size_t begin, end;  // [begin, end) start indices allowed
    Split split;
  };
  const SplitRegions sr = split_regions(n, cfg);
  std::vector<Region> regions;
  regions.push_back({sr.train_begin, sr.train_end, Split::kTrain});
  regions.push_back({sr.val_begin, sr.val_end, Split::kVal});
  regions.push_back({sr.test_begin, sr.test_end, Split::kTest});

  std::vector<TrainingWindow> windows;
  const GravityModel& g = aligned.meta.gravity;

  for (const Region& region : regions) {
    if (region.end > n || region.begin + len > region.end) continue;
    for (std::size_t start = region.begin; start + len <= region.end;
         start += cfg.stride) {
      std::size_t s = start;
      if (cfg.random_offsets && cfg.stride > 1) {
        const auto jitter =
            static_cast<std::size_t>(rng.uniform() * cfg.stride);
        s = std::min(start + jitter, region.end - len);
      }
      TrainingWindow w;
      w.split = region.split;
      w.raw.assign(aligned.imu.begin() + s, aligned.imu.begin() + s + len);
      w.s0 = gt_to_state(aligned.gt[s]);
      w.s1 = gt_to_state(aligned.gt[s + len - 1]);

      if (cfg.augment && !cfg.refresh_per_epoch &&
          region.split != Split::kTest) {
        w.noise_seed = rng.next_u64();
        Rng wrng(w.noise_seed);
        w.aug.bg = wrng.uniform_vec3(-cfg.bias_max_g, cfg.bias_max_g);
        w.aug.ba = wrng.uniform_vec3(-cfg.bias_max_a, cfg.bias_max_a);
        for (ImuSample& smp : w.raw) {
          smp.omega += w.aug.bg + cfg.noise_sigma_g * wrng.gaussian_vec3();
          smp.accel += w.aug.ba + cfg.noise_sigma_a * wrng.gaussian_vec3();
        }
      }

      // per-horizon targets from ground truth, re-derived per prefix
      for (double f : cfg.fractions) {
        const std::size_t m = prefix_length(len, f);
        HorizonTarget target;
        target.fraction = f;
        const double dt = aligned.gt[s + m - 1].t - aligned.gt[s].t;
        target.delta = derive_targets(w.s0, gt_to_state(aligned.gt[s + m - 1]),
                                      dt, g);
        target.delta.n_samples = static_cast<int>(m);
        w.targets.push_back(std::move(target));
      }
      windows.push_back(std::move(w));
    }
  }
  return windows;
}

}  // namespace obsint
