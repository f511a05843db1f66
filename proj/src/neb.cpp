/*******************************************************************************
 * Copyright (c) 2026 The qew Authors.                                         *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#include "qew/neb.h"

#include "qew/parallel.h"
#include "qew/qubit_operator.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace qew {

namespace {

using Eigen::Index;
using Eigen::VectorXd;

constexpr double fd_step = 1e-6;

Index ix(std::size_t i) { return static_cast<Index>(i); }

VectorXd central_difference(const SurfaceModel &s, const VectorXd &p) {
  VectorXd g(p.size());
  for (Index k = 0; k < p.size(); ++k) {
    VectorXd a = p, b = p;
    a[k] += fd_step;
    b[k] -= fd_step;
    g[k] = (s.energy(a) - s.energy(b)) / (2.0 * fd_step);
  }
  return g;
}

VectorXd to_vector(const nlohmann::json &j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(v.data(), ix(v.size()));
}

void check_finite(const NebPath &path, const std::vector<VectorXd> &forces) {
  for (std::size_t i = 0; i < path.images.size(); ++i)
    if (!std::isfinite(path.energies[i]) || !forces[i].allFinite() || !path.images[i].allFinite())
      throw std::runtime_error("non-finite energy or force at image " + std::to_string(i) +
                               " after " + std::to_string(path.steps) + " steps");
}

double max_interior_norm(const std::vector<VectorXd> &forces) {
  double m = 0.0;
  for (std::size_t i = 1; i + 1 < forces.size(); ++i)
    m = std::max(m, forces[i].norm());
  return m;
}

} // namespace

VectorXd SurfaceModel::gradient(const VectorXd &point) const {
  return central_difference(*this, point);
}

double gradient_error(const SurfaceModel &surface, const std::vector<VectorXd> &points) {
  double worst = 0.0;
  for (const auto &p : points) {
    const VectorXd fd = central_difference(surface, p);
    const double err = (surface.gradient(p) - fd).norm() / std::max(1.0, fd.norm());
    if (!std::isfinite(err))
      return std::numeric_limits<double>::infinity();
    worst = std::max(worst, err);
  }
  return worst;
}

MuellerBrownSurface::MuellerBrownSurface(std::vector<Term> terms) : terms_(std::move(terms)) {
  if (terms_.empty())
    throw std::invalid_argument("Mueller-Brown surface needs at least one term");
}

double MuellerBrownSurface::energy(const VectorXd &p) const {
  double e = 0.0;
  for (const auto &t : terms_) {
    const double dx = p[0] - t.x0, dy = p[1] - t.y0;
    e += t.amplitude * std::exp(t.a * dx * dx + t.b * dx * dy + t.c * dy * dy);
  }
  return e;
}

VectorXd MuellerBrownSurface::gradient(const VectorXd &p) const {
  VectorXd g = VectorXd::Zero(2);
  for (const auto &t : terms_) {
    const double dx = p[0] - t.x0, dy = p[1] - t.y0;
    const double e = t.amplitude * std::exp(t.a * dx * dx + t.b * dx * dy + t.c * dy * dy);
    g[0] += e * (2.0 * t.a * dx + t.b * dy);
    g[1] += e * (t.b * dx + 2.0 * t.c * dy);
  }
  return g;
}

namespace {

// Coulomb and exchange integrals of one pair and their r-derivatives.
struct PairTerms {
  double q, j, dq, dj;
};

PairTerms pair_terms(double d, double alpha, double r0, double r) {
  const double e = std::exp(-alpha * (r - r0));
  return {0.5 * d * (1.5 * e * e - e), 0.25 * d * (e * e - 6.0 * e),
          0.5 * d * alpha * (e - 3.0 * e * e), 0.25 * d * alpha * (6.0 * e - 2.0 * e * e)};
}

struct LepsValue {
  double energy;
  VectorXd gradient;
};

LepsValue leps_value(const LepsOscillatorSurface::Parameters &p, const VectorXd &pt) {
  const double r_ab = pt[0], x = pt[1];
  const double a1 = 1.0 + p.a, b1 = 1.0 + p.b, c1 = 1.0 + p.c;
  const auto ab = pair_terms(p.d_ab, p.alpha, p.r0, r_ab);
  const auto bc = pair_terms(p.d_bc, p.alpha, p.r0, p.r_ac - r_ab);
  const auto ac = pair_terms(p.d_ac, p.alpha, p.r0, p.r_ac);
  const double jab = ab.j / a1, jbc = bc.j / b1, jac = ac.j / c1;
  const double s = std::sqrt(jab * jab + jbc * jbc + jac * jac - jab * jbc - jbc * jac -
                             jab * jac);
  const double shift = r_ab - (0.5 * p.r_ac - x / p.c_osc);
  LepsValue out;
  out.energy = ab.q / a1 + bc.q / b1 + ac.q / c1 - s + 2.0 * p.k_c * shift * shift;
  // d r_BC / d r_AB = -1
  const double djab = ab.dj / a1, djbc = -bc.dj / b1;
  const double ds = ((2.0 * jab - jbc - jac) * djab + (2.0 * jbc - jab - jac) * djbc) / (2.0 * s);
  out.gradient = VectorXd(2);
  out.gradient[0] = ab.dq / a1 - bc.dq / b1 - ds + 4.0 * p.k_c * shift;
  out.gradient[1] = 4.0 * p.k_c * shift / p.c_osc;
  return out;
}

} // namespace

double LepsOscillatorSurface::energy(const VectorXd &pt) const {
  return leps_value(p_, pt).energy;
}

VectorXd LepsOscillatorSurface::gradient(const VectorXd &pt) const {
  return leps_value(p_, pt).gradient;
}

namespace {

NebConfig parse_neb_settings(const nlohmann::json &j, double &spring) {
  NebConfig c;
  spring = j.value("spring", 1.0);
  c.time_step = j.value("time_step", c.time_step);
  c.max_time_step = j.value("max_time_step", c.max_time_step);
  c.max_move = j.value("max_move", c.max_move);
  return c;
}

} // namespace

SurfaceEntry load_surface(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw std::invalid_argument("cannot open surface file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception &e) {
    throw std::invalid_argument("surface file " + path.string() + ": " + e.what());
  }
  SurfaceEntry out;
  try {
    out.name = j.at("name").get<std::string>();
    const auto type = j.at("type").get<std::string>();
    if (type == "muller_brown") {
      std::vector<MuellerBrownSurface::Term> terms;
      for (const auto &t : j.at("terms"))
        terms.push_back({t.at("A"), t.at("a"), t.at("b"), t.at("c"), t.at("x0"), t.at("y0")});
      out.surface = std::make_shared<MuellerBrownSurface>(std::move(terms));
    } else if (type == "leps_oscillator") {
      LepsOscillatorSurface::Parameters p;
      const auto &c = j.at("parameters");
      p.a = c.at("a");
      p.b = c.at("b");
      p.c = c.at("c");
      p.d_ab = c.at("d_ab");
      p.d_bc = c.at("d_bc");
      p.d_ac = c.at("d_ac");
      p.r0 = c.at("r0");
      p.alpha = c.at("alpha");
      p.r_ac = c.at("r_ac");
      p.k_c = c.at("k_c");
      p.c_osc = c.at("c_osc");
      out.surface = std::make_shared<LepsOscillatorSurface>(p);
    } else {
      throw std::invalid_argument("unknown surface type '" + type + "'");
    }
    for (const auto &d : j.at("domain"))
      out.domain.emplace_back(d.at(0).get<double>(), d.at(1).get<double>());
    out.reactant = to_vector(j.at("reactant"));
    out.product = to_vector(j.at("product"));
    if (j.contains("neb"))
      out.neb = parse_neb_settings(j.at("neb"), out.spring);
  } catch (const nlohmann::json::exception &e) {
    throw std::invalid_argument("surface file " + path.string() + ": " + e.what());
  }
  const std::size_t dim = out.surface->dimension();
  if (out.domain.size() != dim || static_cast<std::size_t>(out.reactant.size()) != dim ||
      static_cast<std::size_t>(out.product.size()) != dim)
    throw std::invalid_argument("surface file " + path.string() + ": dimension mismatch");

  std::vector<VectorXd> samples;
  const int per_axis = 7;
  for (int a = 0; a < per_axis; ++a)
    for (int b = 0; b < per_axis; ++b) {
      VectorXd p(2);
      p[0] = out.domain[0].first + (out.domain[0].second - out.domain[0].first) * a / (per_axis - 1);
      p[1] = out.domain[1].first + (out.domain[1].second - out.domain[1].first) * b / (per_axis - 1);
      samples.push_back(p);
    }
  out.max_gradient_error = gradient_error(*out.surface, samples);
  if (!(out.max_gradient_error <= gradient_check_tolerance))
    throw std::invalid_argument("surface " + out.name + ": gradient check failed (error " +
                                format_real(out.max_gradient_error) + ")");
  return out;
}

SurfaceEntry surface_by_name(const std::filesystem::path &directory, const std::string &name) {
  const auto path = directory / (name + ".json");
  if (!std::filesystem::exists(path))
    throw std::invalid_argument("no surface named '" + name + "' in " + directory.string());
  return load_surface(path);
}

NebPath interpolate_path(const VectorXd &reactant, const VectorXd &product, std::size_t n_images,
                         double spring) {
  if (n_images < 3)
    throw std::invalid_argument("a path needs at least 3 images");
  if (reactant.size() != product.size())
    throw std::invalid_argument("reactant and product dimensions differ");
  if (!(spring > 0.0))
    throw std::invalid_argument("spring constant must be positive");
  NebPath path;
  path.spring = spring;
  for (std::size_t i = 0; i < n_images; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n_images - 1);
    path.images.push_back((1.0 - t) * reactant + t * product);
  }
  path.images.back() = product;
  return path;
}

void evaluate_path(NebPath &path, const SurfaceModel &surface) {
  path.energies.assign(path.images.size(), 0.0);
  parallel_for(path.images.size(),
               [&](std::size_t i) { path.energies[i] = surface.energy(path.images[i]); });
}

std::size_t highest_interior_image(const NebPath &path) {
  if (path.energies.size() != path.images.size() || path.images.size() < 3)
    throw std::invalid_argument("path energies are not evaluated");
  std::size_t best = 1;
  for (std::size_t i = 2; i + 1 < path.images.size(); ++i)
    if (path.energies[i] > path.energies[best])
      best = i;
  return best;
}

VectorXd path_tangent(const NebPath &path, std::size_t i) {
  const auto &r = path.images;
  const auto &e = path.energies;
  const VectorXd plus = r[i + 1] - r[i], minus = r[i] - r[i - 1];
  VectorXd tau;
  if (e[i + 1] > e[i] && e[i] > e[i - 1]) {
    tau = plus;
  } else if (e[i + 1] < e[i] && e[i] < e[i - 1]) {
    tau = minus;
  } else {
    const double d1 = std::abs(e[i + 1] - e[i]), d2 = std::abs(e[i - 1] - e[i]);
    const double hi = std::max(d1, d2), lo = std::min(d1, d2);
    tau = e[i + 1] > e[i - 1] ? VectorXd(plus * hi + minus * lo) : VectorXd(plus * lo + minus * hi);
  }
  const double n = tau.norm();
  return n > 0.0 ? VectorXd(tau / n) : VectorXd(VectorXd::Zero(tau.size()));
}

std::vector<VectorXd> neb_forces(const NebPath &path, const SurfaceModel &surface, bool climbing,
                                 std::optional<std::size_t> climb_index) {
  const std::size_t n = path.images.size();
  if (n < 3 || path.energies.size() != n)
    throw std::invalid_argument("path needs at least 3 evaluated images");
  const std::size_t climb = climb_index.value_or(climbing ? highest_interior_image(path) : 0);
  if (climbing && (climb == 0 || climb + 1 >= n))
    throw std::invalid_argument("climbing image must be interior");
  std::vector<VectorXd> forces(n, VectorXd::Zero(path.images[0].size()));
  parallel_for(n - 2, [&](std::size_t k) {
    const std::size_t i = k + 1;
    const VectorXd g = surface.gradient(path.images[i]);
    const VectorXd tau = path_tangent(path, i);
    if (climbing && i == climb) {
      forces[i] = -g + 2.0 * g.dot(tau) * tau;
      return;
    }
    const double spring = path.spring * ((path.images[i + 1] - path.images[i]).norm() -
                                         (path.images[i] - path.images[i - 1]).norm());
    forces[i] = -g + g.dot(tau) * tau + spring * tau;
  });
  return forces;
}

void NebConfig::validate() const {
  if (!(force_tol > 0.0))
    throw std::invalid_argument("force_tol must be positive");
  if (!(time_step > 0.0) || !(max_time_step >= time_step))
    throw std::invalid_argument("time steps must satisfy 0 < time_step <= max_time_step");
  if (!(max_move > 0.0))
    throw std::invalid_argument("max_move must be positive");
}

NebPath relax_path(NebPath path, const SurfaceModel &surface, const NebConfig &config) {
  config.validate();
  const std::size_t n = path.images.size();
  if (n < 3)
    throw std::invalid_argument("a path needs at least 3 images");
  const Index dim = path.images[0].size();
  const Index m = ix(n - 2) * dim;

  // FIRE constants
  const double alpha_start = 0.1, f_inc = 1.1, f_dec = 0.5, f_alpha = 0.99;
  const std::size_t n_min = 5;
  double dt = config.time_step, alpha = alpha_start;
  std::size_t since_reset = 0;

  VectorXd velocity = VectorXd::Zero(m);
  path.converged = false;
  path.force_history.clear();
  path.climb_energy_history.clear();
  path.steps = 0;
  for (;;) {
    evaluate_path(path, surface);
    if (config.climbing)
      path.climb_index = highest_interior_image(path);
    const auto forces = neb_forces(path, surface, config.climbing, path.climb_index);
    check_finite(path, forces);
    const double fmax = max_interior_norm(forces);
    path.force_history.push_back(fmax);
    if (config.climbing)
      path.climb_energy_history.push_back(path.energies[*path.climb_index]);
    if (fmax < config.force_tol) {
      path.converged = true;
      break;
    }
    if (path.steps >= config.max_steps)
      break;

    VectorXd f(m);
    for (std::size_t i = 1; i + 1 < n; ++i)
      f.segment(ix(i - 1) * dim, dim) = forces[i];
    VectorXd step;
    if (config.step_rule == StepRule::fire) {
      const double power = f.dot(velocity);
      if (power > 0.0) {
        velocity = (1.0 - alpha) * velocity + alpha * velocity.norm() * f / f.norm();
        if (++since_reset > n_min) {
          dt = std::min(dt * f_inc, config.max_time_step);
          alpha *= f_alpha;
        }
      } else {
        velocity.setZero();
        dt *= f_dec;
        alpha = alpha_start;
        since_reset = 0;
      }
      velocity += dt * f;
      step = dt * velocity;
    } else {
      // Velocity projected on the force direction, zeroed when opposed.
      const double fn = f.norm();
      const double vf = velocity.dot(f) / fn;
      velocity = vf > 0.0 ? VectorXd(vf * f / fn) : VectorXd(VectorXd::Zero(m));
      velocity += dt * f;
      step = dt * velocity;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
      auto seg = step.segment(ix(i - 1) * dim, dim);
      const double len = seg.norm();
      if (len > config.max_move)
        seg *= config.max_move / len;
      path.images[i] += seg;
    }
    ++path.steps;
  }
  return path;
}

Barrier extract_barrier(const NebPath &path) {
  if (path.energies.size() != path.images.size() || path.images.size() < 3)
    throw std::invalid_argument("path energies are not evaluated");
  Barrier b;
  b.ts_index = highest_interior_image(path);
  b.activation = path.energies[b.ts_index] - path.energies.front();
  b.reaction = path.energies.back() - path.energies.front();
  if (!path.converged)
    b.warnings.push_back("path is not converged; barrier is approximate");
  return b;
}

int SaddleCharacter::negative_count() const {
  return static_cast<int>((hessian_eigenvalues.array() < 0.0).count());
}

SaddleCharacter saddle_character(const SurfaceModel &surface, const VectorXd &point, double h) {
  const Index d = point.size();
  Eigen::MatrixXd hess(d, d);
  for (Index k = 0; k < d; ++k) {
    VectorXd a = point, b = point;
    a[k] += h;
    b[k] -= h;
    hess.col(k) = (surface.gradient(a) - surface.gradient(b)) / (2.0 * h);
  }
  hess = (0.5 * (hess + hess.transpose())).eval();
  SaddleCharacter out;
  out.gradient_norm = surface.gradient(point).norm();
  out.hessian_eigenvalues = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(hess).eigenvalues();
  return out;
}

VectorXd refine_stationary_point(const SurfaceModel &surface, VectorXd point, double tol,
                                 std::size_t max_iter) {
  const double h = 1e-5;
  const Index d = point.size();
  for (std::size_t it = 0; it < max_iter; ++it) {
    const VectorXd g = surface.gradient(point);
    if (g.norm() < tol)
      return point;
    Eigen::MatrixXd hess(d, d);
    for (Index k = 0; k < d; ++k) {
      VectorXd a = point, b = point;
      a[k] += h;
      b[k] -= h;
      hess.col(k) = (surface.gradient(a) - surface.gradient(b)) / (2.0 * h);
    }
    point -= hess.fullPivLu().solve(g);
    if (!point.allFinite())
      throw std::runtime_error("stationary-point refinement diverged");
  }
  return point;
}

NebPath window_path(const NebPath &path, std::size_t start, std::size_t end,
                    std::size_t n_images) {
  if (start >= end || end >= path.images.size())
    throw std::invalid_argument("window must satisfy start < end < image count");
  if (n_images < 3)
    throw std::invalid_argument("a path needs at least 3 images");
  std::vector<double> arc{0.0};
  for (std::size_t i = start + 1; i <= end; ++i)
    arc.push_back(arc.back() + (path.images[i] - path.images[i - 1]).norm());
  NebPath out;
  out.spring = path.spring;
  for (std::size_t k = 0; k < n_images; ++k) {
    const double s = arc.back() * static_cast<double>(k) / static_cast<double>(n_images - 1);
    std::size_t seg = 0;
    while (seg + 2 < arc.size() && arc[seg + 1] < s)
      ++seg;
    const double len = arc[seg + 1] - arc[seg];
    const double t = len > 0.0 ? std::clamp((s - arc[seg]) / len, 0.0, 1.0) : 0.0;
    out.images.push_back((1.0 - t) * path.images[start + seg] + t * path.images[start + seg + 1]);
  }
  out.images.front() = path.images[start];
  out.images.back() = path.images[end];
  return out;
}

std::string write_path_csv(const NebPath &path) {
  if (path.images.empty())
    throw std::invalid_argument("empty path");
  const Index d = path.images[0].size();
  std::string out = "image";
  for (Index k = 0; k < d; ++k)
    out += ",x" + std::to_string(k);
  out += ",energy\n";
  for (std::size_t i = 0; i < path.images.size(); ++i) {
    out += std::to_string(i);
    for (Index k = 0; k < d; ++k)
      out += "," + format_real(path.images[i][k]);
    out += "," + (i < path.energies.size() ? format_real(path.energies[i]) : std::string("nan"));
    out += "\n";
  }
  return out;
}

NebPath parse_path_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line.rfind("image,", 0) != 0)
    throw std::invalid_argument("path CSV: missing header");
  const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  if (columns < 2)
    throw std::invalid_argument("path CSV: need at least one coordinate");
  NebPath path;
  bool all_energies = true;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r")
      continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');)
      cells.push_back(c);
    if (cells.size() != columns + 1)
      throw std::invalid_argument("path CSV row " + std::to_string(row) + ": wrong column count");
    try {
      if (std::stoul(cells[0]) != row)
        throw std::invalid_argument("image indices must be consecutive from 0");
      VectorXd p(ix(columns - 1));
      for (std::size_t k = 0; k + 1 < columns; ++k)
        p[ix(k)] = std::stod(cells[k + 1]);
      path.images.push_back(p);
      const double e = std::stod(cells.back());
      all_energies = all_energies && std::isfinite(e);
      path.energies.push_back(e);
    } catch (const std::logic_error &e) {
      throw std::invalid_argument("path CSV row " + std::to_string(row) + ": " + e.what());
    }
    ++row;
  }
  if (path.images.size() < 3)
    throw std::invalid_argument("path CSV: need at least 3 images");
  if (!all_energies)
    path.energies.clear();
  return path;
}

nlohmann::json neb_report(const NebPath &path, const Barrier &barrier, const NebConfig &config) {
  nlohmann::json j;
  j["images"] = path.images.size();
  j["steps"] = path.steps;
  j["converged"] = path.converged;
  j["final_force"] = path.force_history.empty() ? 0.0 : path.force_history.back();
  j["activation"] = barrier.activation;
  j["reaction"] = barrier.reaction;
  j["ts_index"] = barrier.ts_index;
  j["warnings"] = barrier.warnings;
  j["energies"] = path.energies;
  j["settings"] = {{"spring", path.spring},
                   {"force_tol", config.force_tol},
                   {"max_steps", config.max_steps},
                   {"climbing", config.climbing},
                   {"step_rule", config.step_rule == StepRule::fire ? "fire" : "quick_min"},
                   {"tangent", "improved"},
                   {"defaults_note", "spring, tangent and optimizer are chosen defaults"}};
  return j;
}

} // namespace qew
