#include "chipgate/trapfinder.hpp"

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <sstream>

#include "chipgate/error.hpp"

namespace chipgate::trap {

namespace {

constexpr double kTwoPi = 2.0 * constants::pi;

Mat3 gradient_jacobian(const MagnitudeModel& model, const Vec3& p, double step) {
  Mat3 H;
  for (int j = 0; j < 3; ++j) {
    Vec3 e = Vec3::Zero();
    e[j] = step;
    H.col(j) = (model.gradient(p + e) - model.gradient(p - e)) / (2.0 * step);
  }
  return 0.5 * (H + H.transpose());
}

struct DescentOutcome {
  Vec3 position;
  double gradient_norm;
  int iterations;
  bool converged;
};

DescentOutcome newton_descent(const MagnitudeModel& model, Vec3 p, const DescentOptions& opt) {
  double f = model.magnitude(p);
  Vec3 g = model.gradient(p);
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    if (g.norm() < 1e-3 * opt.gradient_tolerance) break;
    const Mat3 H = gradient_jacobian(model, p, opt.hessian_step);
    Vec3 step;
    Eigen::LLT<Mat3> llt(H);
    if (llt.info() == Eigen::Success) {
      step = -llt.solve(g);
    } else {
      step = -g / g.norm() * opt.max_step;
    }
    if (step.norm() > opt.max_step) step *= opt.max_step / step.norm();

    if (llt.info() == Eigen::Success && step.norm() < 1e-12) {
      // Changes in |B| over a picometre are below rounding; finish with
      // plain Newton steps.
      p += step;
      f = model.magnitude(p);
      g = model.gradient(p);
      continue;
    }
    double t = 1.0;
    Vec3 trial = p + step;
    double ft = model.magnitude(trial);
    while (ft > f + 1e-4 * t * g.dot(step) && t > 1e-10) {
      t *= 0.5;
      trial = p + t * step;
      ft = model.magnitude(trial);
    }
    if (ft > f + 1e-4 * t * g.dot(step)) {
      // |B| is flat to rounding here; trust the gradient instead.
      trial = p + step;
      const Vec3 gt = model.gradient(trial);
      if (!(gt.norm() < g.norm())) break;
      p = trial;
      f = model.magnitude(p);
      g = gt;
      continue;
    }
    const double moved = (trial - p).norm();
    p = trial;
    f = ft;
    g = model.gradient(p);
    if (moved < 1e-18) break;
  }
  return {p, g.norm(), it, g.norm() < opt.gradient_tolerance};
}

Vec3 in_plane_unit(const Vec3& v) {
  Vec3 u(v.x(), v.y(), 0.0);
  return u / u.norm();
}

}  // namespace

MagnitudeModel model_of(const field::ChipConfig& config) {
  config.validate();
  MagnitudeModel m;
  m.magnitude = [config](const Vec3& p) { return field::chip_field(config, p).magnitude; };
  m.gradient = [config](const Vec3& p) { return field::magnitude_gradient(config, p); };
  m.moment = config.species.moment();
  m.mass = config.species.mass;
  return m;
}

std::vector<Vec3> default_seeds() {
  return {Vec3(-0.4e-6, 0.0, 1.2e-6), Vec3(0.4e-6, 0.0, 1.2e-6)};
}

std::vector<TrapMinimum> find_minima(const MagnitudeModel& model, std::span<const Vec3> seeds,
                                     const DescentOptions& options) {
  if (seeds.empty()) throw DescentError("find_minima needs at least one seed");
  std::vector<TrapMinimum> found;
  std::ostringstream trace;
  for (const auto& seed : seeds) {
    if (!seed.allFinite()) throw DescentError("non-finite seed");
    DescentOutcome out;
    try {
      out = newton_descent(model, seed, options);
    } catch (const Error& e) {
      trace << "  seed (" << seed.transpose() << "): " << e.what() << "\n";
      continue;
    }
    if (!out.converged) {
      trace << "  seed (" << seed.transpose() << "): stopped at (" << out.position.transpose()
            << ") with |grad| = " << out.gradient_norm << " T/m after " << out.iterations
            << " iterations\n";
      continue;
    }
    const Mat3 H = gradient_jacobian(model, out.position, options.hessian_step);
    Eigen::SelfAdjointEigenSolver<Mat3> es(H);
    if (es.eigenvalues().minCoeff() <= 0.0) {
      trace << "  seed (" << seed.transpose() << "): converged to a saddle\n";
      continue;
    }
    const bool duplicate = std::any_of(found.begin(), found.end(), [&](const TrapMinimum& m) {
      return (m.position - out.position).norm() < options.dedup_distance;
    });
    if (duplicate) continue;
    const double b = model.magnitude(out.position);
    found.push_back({out.position, b, model.moment * b});
  }
  if (found.empty()) throw DescentError("no minimum found from any seed:\n" + trace.str());
  std::sort(found.begin(), found.end(), [](const TrapMinimum& a, const TrapMinimum& b) {
    if (a.position.x() != b.position.x()) return a.position.x() < b.position.x();
    return a.position.y() < b.position.y();
  });
  return found;
}

std::vector<TrapMinimum> find_minima(const field::ChipConfig& config, std::span<const Vec3> seeds,
                                     const DescentOptions& options) {
  return find_minima(model_of(config), seeds, options);
}

Mat3 potential_hessian(const MagnitudeModel& model, const Vec3& p, double h) {
  const auto U = [&](const Vec3& q) { return model.potential(q); };
  Mat3 H;
  const double u0 = U(p);
  for (int i = 0; i < 3; ++i) {
    Vec3 ei = Vec3::Zero();
    ei[i] = h;
    H(i, i) = (U(p + ei) - 2.0 * u0 + U(p - ei)) / (h * h);
    for (int j = i + 1; j < 3; ++j) {
      Vec3 ej = Vec3::Zero();
      ej[j] = h;
      H(i, j) = (U(p + ei + ej) - U(p + ei - ej) - U(p - ei + ej) + U(p - ei - ej)) / (4.0 * h * h);
      H(j, i) = H(i, j);
    }
  }
  return H;
}

PrincipalAxes principal_axes(const MagnitudeModel& model, const Vec3& p, double step) {
  PrincipalAxes out;
  out.hessian = potential_hessian(model, p, step);
  Eigen::SelfAdjointEigenSolver<Mat3> es(out.hessian);
  const auto& lambda = es.eigenvalues();
  if (lambda.minCoeff() <= 0.0) {
    std::ostringstream msg;
    msg << "Hessian at (" << p.transpose() << ") has eigenvalues " << lambda.transpose();
    throw SaddlePointError(msg.str());
  }
  // Softest direction is longitudinal; of the stiff pair the one leaning out
  // of the chip plane is z.
  int lon = 0, a = 1, b = 2;
  if (std::abs(es.eigenvectors()(2, a)) > std::abs(es.eigenvectors()(2, b))) std::swap(a, b);
  const std::array<int, 3> order{lon, a, b};
  for (int k = 0; k < 3; ++k) {
    out.freqs[k] = std::sqrt(lambda[order[k]] / model.mass) / kTwoPi;
    out.axes[k] = es.eigenvectors().col(order[k]);
  }
  return out;
}

TrapCharacterization characterize(const MagnitudeModel& model,
                                  const std::array<TrapMinimum, 2>& minima, double hessian_step) {
  TrapCharacterization t;
  t.minima = minima;
  const Vec3 pa = minima[0].position;
  const Vec3 pb = minima[1].position;
  const Vec3 d = pb - pa;
  if (d.norm() == 0.0) throw DomainError("characterize needs two distinct minima");

  const auto ax_a = principal_axes(model, pa, hessian_step);
  const auto ax_b = principal_axes(model, pb, hessian_step);
  for (int k = 0; k < 3; ++k) t.freqs[k] = 0.5 * (ax_a.freqs[k] + ax_b.freqs[k]);
  t.axes = ax_a.axes;

  const Vec3 xprime = in_plane_unit(d);
  t.beta = std::atan2(xprime.y(), xprime.x());
  Vec3 soft = ax_a.axes[0];
  if (soft.dot(xprime) < 0.0) soft = -soft;
  t.hessian_axis_angle = std::atan2(soft.y(), soft.x());
  t.separation = std::abs(d.dot(xprime));
  t.height_z0 = 0.5 * (pa.z() + pb.z());
  t.center = 0.5 * (pa + pb);
  t.axis_direction = d / d.norm();

  // Golden-section maximum of U along the segment joining the minima.
  const auto along = [&](double s) { return model.potential(pa + s * d); };
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = 0.0, hi = 1.0;
  double c1 = hi - invphi * (hi - lo), c2 = lo + invphi * (hi - lo);
  double f1 = along(c1), f2 = along(c2);
  while (hi - lo > 1e-12) {
    if (f1 > f2) {
      hi = c2; c2 = c1; f2 = f1;
      c1 = hi - invphi * (hi - lo); f1 = along(c1);
    } else {
      lo = c1; c1 = c2; f1 = f2;
      c2 = lo + invphi * (hi - lo); f2 = along(c2);
    }
  }
  Vec3 saddle = pa + 0.5 * (lo + hi) * d;

  // Polish to the 3D stationary point (a saddle of |B|) with undamped Newton.
  Vec3 p = saddle;
  for (int it = 0; it < 50; ++it) {
    const Vec3 g = model.gradient(p);
    if (g.norm() < 1e-9) break;
    const Mat3 H = gradient_jacobian(model, p, hessian_step);
    Vec3 step = H.fullPivLu().solve(-g);
    if (!step.allFinite() || step.norm() > 0.25 * t.separation) break;
    p += step;
  }
  const bool polished = model.gradient(p).norm() < 1e-6 &&
                        std::abs((p - t.center).dot(t.axis_direction)) < 0.25 * t.separation;
  if (polished) saddle = p;
  t.barrier_position = saddle;
  t.barrier_field = model.magnitude(saddle);
  t.barrier_height = model.potential(saddle) - 0.5 * (minima[0].potential + minima[1].potential);
  return t;
}

TrapCharacterization characterize(const field::ChipConfig& config,
                                  const std::array<TrapMinimum, 2>& minima, double hessian_step) {
  return characterize(model_of(config), minima, hessian_step);
}

TrapCharacterization analyze(const field::ChipConfig& config, std::span<const Vec3> seeds,
                             const DescentOptions& options) {
  const auto model = model_of(config);
  const auto minima = find_minima(model, seeds, options);
  if (minima.size() < 2) {
    throw DescentError("expected a double well, found " + std::to_string(minima.size()) +
                       " minimum");
  }
  return characterize(model, {minima.front(), minima.back()}, options.hessian_step);
}

TuneResult tune_bias(const field::ChipConfig& config, double target_field, BiasComponent component,
                     const TuneOptions& options) {
  const int idx = component == BiasComponent::X ? 0 : 1;
  const double b0 = config.bias[idx];
  std::vector<Vec3> seeds = options.seeds;

  const auto min_field = [&](double b) {
    field::ChipConfig c = config;
    c.bias[idx] = b;
    const auto minima = find_minima(c, seeds);
    double m = minima.front().field_magnitude;
    for (const auto& mm : minima) m = std::min(m, mm.field_magnitude);
    seeds.clear();
    for (const auto& mm : minima) seeds.push_back(mm.position);
    return m;
  };

  TuneResult result;
  const int n = std::max(options.scan_points, 2);
  for (int k = 0; k < n; ++k) {
    const double b = b0 - options.scan_halfwidth + 2.0 * options.scan_halfwidth * k / (n - 1);
    double m;
    try {
      m = min_field(b);
    } catch (const DescentError& e) {
      throw TuningError("bias scan lost the trap at " + std::to_string(b / constants::gauss) +
                        " G: " + e.what());
    }
    result.scan.bias_values.push_back(b);
    result.scan.min_fields.push_back(m);
  }
  const auto& fs = result.scan.min_fields;
  const bool increasing = fs[1] > fs[0];
  for (int k = 1; k < n; ++k) {
    if ((fs[k] > fs[k - 1]) != increasing || fs[k] == fs[k - 1]) {
      throw TuningError("|B|_min is not strictly monotone over the bias scan");
    }
  }
  int bracket = -1;
  for (int k = 1; k < n; ++k) {
    if ((fs[k - 1] - target_field) * (fs[k] - target_field) <= 0.0) {
      bracket = k;
      break;
    }
  }
  if (bracket < 0) {
    std::ostringstream msg;
    msg << "no bracket for target " << target_field / constants::gauss << " G: scan covers "
        << fs.front() / constants::gauss << " .. " << fs.back() / constants::gauss << " G";
    throw TuningError(msg.str());
  }

  seeds = options.seeds;
  const auto residual = [&](double b) { return min_field(b) - target_field; };
  double lo = result.scan.bias_values[bracket - 1];
  double hi = result.scan.bias_values[bracket];
  double root;
  const double f_lo = fs[bracket - 1] - target_field;
  const double f_hi = fs[bracket] - target_field;
  if (f_lo == 0.0) {
    root = lo;
  } else if (f_hi == 0.0) {
    root = hi;
  } else {
    boost::uintmax_t max_iter = 100;
    const double tol = options.root_tolerance;
    const auto r = boost::math::tools::toms748_solve(
        residual, lo, hi, f_lo, f_hi,
        [tol](double a, double b) { return std::abs(b - a) <= tol; }, max_iter);
    root = 0.5 * (r.first + r.second);
  }
  result.config = config;
  result.config.bias[idx] = root;
  seeds = options.seeds;
  result.achieved_field = min_field(root);
  return result;
}

Grid1D axis_potential(const field::ChipConfig& config, const TrapCharacterization& trap,
                      double halfwidth, std::size_t n_points) {
  if (n_points < 64) throw DomainError("axis potential needs at least 64 points");
  if (!(halfwidth > 0.5 * trap.separation)) {
    throw DomainError("halfwidth " + std::to_string(halfwidth) +
                      " m does not contain both minima (half separation " +
                      std::to_string(0.5 * trap.separation) + " m)");
  }
  const double shift = 0.5 * (trap.minima[0].potential + trap.minima[1].potential);
  Grid1D g;
  g.spacing = 2.0 * halfwidth / static_cast<double>(n_points);
  g.origin = -halfwidth;
  g.mass = config.species.mass;
  g.values.resize(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    const Vec3 p = trap.center + g.x(i) * trap.axis_direction;
    g.values[i] = field::zeeman_potential(config, p) - shift;
  }
  g.axis = AxisInfo{trap.center, trap.axis_direction, trap.beta, shift};
  return g;
}

}  // namespace chipgate::trap
