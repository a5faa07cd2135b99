#include "mct/ocean.hpp"

#include "mct/csv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <random>
#include <stdexcept>

namespace mct {
namespace {

bool nearly_uniform(const Eigen::VectorXd& grid) {
  if (grid.size() < 3) return true;
  const double h = grid(1) - grid(0);
  for (Eigen::Index i = 2; i < grid.size(); ++i) {
    if (std::abs((grid(i) - grid(i - 1)) - h) > 1e-6 * std::max(1.0, std::abs(h))) return false;
  }
  return true;
}

Eigen::Index lower_cell(const Eigen::VectorXd& grid, double v) {
  // index i with grid(i) <= v <= grid(i+1)
  Eigen::Index lo = 0, hi = grid.size() - 1;
  while (hi - lo > 1) {
    const Eigen::Index mid = (lo + hi) / 2;
    if (grid(mid) <= v) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

}  // namespace

void CurrentField::validate() const {
  if (depths.size() == 0 || times.size() == 0) {
    throw std::invalid_argument("current field: empty grid");
  }
  for (Eigen::Index i = 1; i < depths.size(); ++i) {
    if (!(depths(i) > depths(i - 1))) {
      throw std::invalid_argument("current field: depth grid must be strictly increasing");
    }
  }
  for (Eigen::Index j = 1; j < times.size(); ++j) {
    if (!(times(j) > times(j - 1))) {
      throw std::invalid_argument("current field: time grid must be strictly increasing");
    }
  }
  if (!nearly_uniform(depths) || !nearly_uniform(times)) {
    throw std::invalid_argument("current field: grids must be uniformly spaced");
  }
  if (speed.rows() != depths.size() || speed.cols() != times.size()) {
    throw std::invalid_argument("current field: speed matrix does not match the grids");
  }
  if (!speed.allFinite() || (speed.array() < 0.0).any()) {
    throw std::invalid_argument("current field: speeds must be finite and non-negative");
  }
}

double CurrentField::at(double depth_m, double time_s) const {
  const double eps = 1e-9;
  if (depth_m < min_depth() - eps || depth_m > max_depth() + eps) {
    throw std::out_of_range("current field: depth " + std::to_string(depth_m) +
                            " m outside grid [" + std::to_string(min_depth()) + ", " +
                            std::to_string(max_depth()) + "]");
  }
  if (time_s < times(0) - eps || time_s > duration() + eps) {
    throw std::out_of_range("current field: time " + std::to_string(time_s) + " s outside grid");
  }
  const double z = std::clamp(depth_m, min_depth(), max_depth());
  const double t = std::clamp(time_s, times(0), duration());

  if (depths.size() == 1 && times.size() == 1) return speed(0, 0);

  const Eigen::Index i = depths.size() == 1 ? 0 : lower_cell(depths, z);
  const Eigen::Index j = times.size() == 1 ? 0 : lower_cell(times, t);
  const Eigen::Index i1 = std::min<Eigen::Index>(i + 1, depths.size() - 1);
  const Eigen::Index j1 = std::min<Eigen::Index>(j + 1, times.size() - 1);
  const double dz = depths(i1) > depths(i) ? (z - depths(i)) / (depths(i1) - depths(i)) : 0.0;
  const double dt = times(j1) > times(j) ? (t - times(j)) / (times(j1) - times(j)) : 0.0;
  const double v0 = speed(i, j) * (1 - dz) + speed(i1, j) * dz;
  const double v1 = speed(i, j1) * (1 - dz) + speed(i1, j1) * dz;
  return v0 * (1 - dt) + v1 * dt;
}

std::vector<CurrentObservation> CurrentField::observations() const {
  std::vector<CurrentObservation> out;
  out.reserve(static_cast<size_t>(depths.size()) * times.size());
  for (Eigen::Index j = 0; j < times.size(); ++j) {
    for (Eigen::Index i = 0; i < depths.size(); ++i) {
      out.push_back({times(j), depths(i), speed(i, j)});
    }
  }
  return out;
}

CurrentField load_adcp_csv(const std::string& path, FillReport* report) {
  const CsvTable table = read_csv(path);
  const int ct = table.column("time_s");
  const int cz = table.column("depth_m");
  const int cv = table.column("speed_mps");
  if (ct < 0 || cz < 0 || cv < 0) {
    throw std::runtime_error("load_adcp_csv: " + path +
                             " must have header time_s,depth_m,speed_mps");
  }

  FillReport local;
  std::vector<CurrentObservation> good;
  std::set<double> raw_times;
  for (const auto& row : table.rows) {
    const size_t need = static_cast<size_t>(std::max({ct, cz, cv})) + 1;
    if (row.size() < need) {
      ++local.dropped_rows;
      continue;
    }
    const double t = row[ct], z = row[cz], v = row[cv];
    if (std::isfinite(t)) raw_times.insert(t);
    const bool bad = !std::isfinite(t) || !std::isfinite(z) || !std::isfinite(v) || v < 0.0 ||
                     z < 0.0 || z > kInstrumentMaxDepth;
    if (bad) {
      ++local.dropped_rows;
      continue;
    }
    good.push_back({t, z, v});
  }
  if (good.empty()) throw std::runtime_error("load_adcp_csv: " + path + " has no usable rows");
  for (double t : raw_times) {
    const bool covered = std::any_of(good.begin(), good.end(),
                                     [t](const CurrentObservation& o) { return o.t == t; });
    if (!covered) {
      throw std::runtime_error("load_adcp_csv: no usable data in the time column at t=" +
                               std::to_string(t));
    }
  }

  std::vector<double> zs, ts;
  for (const auto& o : good) {
    zs.push_back(o.z);
    ts.push_back(o.t);
  }
  auto uniq = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  uniq(zs);
  uniq(ts);

  std::map<std::pair<double, double>, double> cell;  // (z, t) -> speed
  for (const auto& o : good) cell[{o.z, o.t}] = o.v_c;

  CurrentField field;
  field.depths = Eigen::Map<Eigen::VectorXd>(zs.data(), static_cast<Eigen::Index>(zs.size()));
  field.times = Eigen::Map<Eigen::VectorXd>(ts.data(), static_cast<Eigen::Index>(ts.size()));
  field.speed.resize(field.depths.size(), field.times.size());

  for (Eigen::Index j = 0; j < field.times.size(); ++j) {
    bool any = false;
    for (Eigen::Index i = 0; i < field.depths.size(); ++i) {
      any = any || cell.count({zs[i], ts[j]}) > 0;
    }
    if (!any) {
      throw std::runtime_error("load_adcp_csv: no usable data at time " + std::to_string(ts[j]));
    }
    for (Eigen::Index i = 0; i < field.depths.size(); ++i) {
      auto it = cell.find({zs[i], ts[j]});
      if (it != cell.end()) {
        field.speed(i, j) = it->second;
        continue;
      }
      // nearest depth with data at this time
      double best = 0.0, best_dist = std::numeric_limits<double>::infinity();
      for (Eigen::Index k = 0; k < field.depths.size(); ++k) {
        auto kt = cell.find({zs[k], ts[j]});
        if (kt == cell.end()) continue;
        const double d = std::abs(zs[k] - zs[i]);
        if (d < best_dist) {
          best_dist = d;
          best = kt->second;
        }
      }
      field.speed(i, j) = best;
      ++local.filled_cells;
    }
  }

  field.validate();
  if (report) *report = local;
  return field;
}

void save_field_csv(const CurrentField& field, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_field_csv: cannot open " + path);
  out << "time_s,depth_m,speed_mps\n";
  for (Eigen::Index j = 0; j < field.times.size(); ++j) {
    for (Eigen::Index i = 0; i < field.depths.size(); ++i) {
      out << format_double(field.times(j)) << ',' << format_double(field.depths(i)) << ','
          << format_double(field.speed(i, j)) << '\n';
    }
  }
}

ShearKind parse_shear_kind(const std::string& name) {
  if (name == "low") return ShearKind::low;
  if (name == "high") return ShearKind::high;
  throw std::invalid_argument("unknown shear kind '" + name + "' (expected low or high)");
}

CurrentField synthesize_shear_profile(ShearKind kind, double duration_s, unsigned seed,
                                      double depth_step_m, double time_step_s) {
  if (!(duration_s > 0.0)) {
    throw std::invalid_argument("synthesize_shear_profile: duration must be positive");
  }

  struct Params {
    double surf, z_decay, jet_amp, jet_sigma, jet_center, jet_sway, noise_amp;
  };
  const Params p = kind == ShearKind::low
                       ? Params{1.00, 300.0, 0.70, 55.0, 45.0, 10.0, 0.02}
                       : Params{1.30, 60.0, 1.05, 12.0, 50.0, 18.0, 0.05};

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
  const double jet_phase = phase(rng);
  const double ph1 = phase(rng), ph2 = phase(rng), ph3 = phase(rng), ph4 = phase(rng);

  const double max_z = 120.0;
  const int nz = static_cast<int>(std::floor(max_z / depth_step_m)) + 1;
  const int nt = static_cast<int>(std::floor(duration_s / time_step_s)) + 1;
  const double day = 86400.0;

  CurrentField field;
  field.depths = Eigen::VectorXd::LinSpaced(nz, 0.0, depth_step_m * (nz - 1));
  field.times = Eigen::VectorXd::LinSpaced(nt, 0.0, time_step_s * (nt - 1));
  field.speed.resize(nz, nt);

  for (int j = 0; j < nt; ++j) {
    const double t = field.times(j);
    // anchored so the jet sits at jet_center at t = 0 for every seed
    const double zc = p.jet_center +
                      p.jet_sway * (std::sin(2.0 * M_PI * t / day + jet_phase) - std::sin(jet_phase));
    for (int i = 0; i < nz; ++i) {
      const double z = field.depths(i);
      const double surf = p.surf * std::exp(-z / p.z_decay);
      const double jet =
          p.jet_amp * std::exp(-(z - zc) * (z - zc) / (2.0 * p.jet_sigma * p.jet_sigma));
      const double noise =
          p.noise_amp * (std::sin(2.0 * M_PI * t / (0.31 * day) + ph1) *
                             std::sin(2.0 * M_PI * z / 180.0 + ph2) +
                         0.5 * std::sin(2.0 * M_PI * t / (0.11 * day) + ph3) *
                             std::sin(2.0 * M_PI * z / 75.0 + ph4));
      field.speed(i, j) = std::max(0.0, surf + jet + noise);
    }
  }
  field.validate();
  return field;
}

double mean_vertical_gradient(const CurrentField& field) {
  double acc = 0.0;
  long n = 0;
  for (Eigen::Index j = 0; j < field.times.size(); ++j) {
    for (Eigen::Index i = 0; i + 1 < field.depths.size(); ++i) {
      acc += std::abs(field.speed(i + 1, j) - field.speed(i, j)) /
             (field.depths(i + 1) - field.depths(i));
      ++n;
    }
  }
  return n > 0 ? acc / static_cast<double>(n) : 0.0;
}

}  // namespace mct
