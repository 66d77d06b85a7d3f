#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace oracle {

namespace {

using Vec = std::vector<long double>;

struct Run {
  Vec logits;
  std::vector<bool> pattern;
};

Run run(const ares::Model& model, const Vec& x) {
  Run r;
  Vec act = x;
  std::size_t d = 0;
  for (const auto& layer : model.spec.layers) {
    if (layer.kind == ares::LayerKind::dense) {
      const auto& p = model.params.dense[d++];
      Vec out(layer.out_dim);
      for (std::size_t o = 0; o < layer.out_dim; ++o) {
        long double s = p.bias[o];
        for (std::size_t i = 0; i < layer.in_dim; ++i) s += static_cast<long double>(p.weight[o * layer.in_dim + i]) * act[i];
        out[o] = s;
      }
      act = std::move(out);
    } else {
      for (auto& v : act) {
        r.pattern.push_back(v > 0);
        v = v > 0 ? v : 0;
      }
    }
  }
  r.logits = std::move(act);
  return r;
}

long double xent(const Vec& z, std::size_t label) {
  const long double m = *std::max_element(z.begin(), z.end());
  long double s = 0;
  for (auto v : z) s += std::exp(v - m);
  return std::log(s) + m - z[label];
}

Vec widen(const ares::Tensor& t) {
  Vec v(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) v[i] = t[i];
  return v;
}

}  // namespace

long double loss(const ares::Model& model, const Vec& x, std::size_t label) {
  return xent(run(model, x).logits, label);
}

std::vector<bool> relu_pattern(const ares::Model& model, const Vec& x) { return run(model, x).pattern; }

FdGradient input_gradient(const ares::Model& model, const ares::Tensor& x, std::size_t label, double h) {
  const Vec base = widen(x);
  const auto pattern = relu_pattern(model, base);
  FdGradient g{std::vector<double>(x.size()), std::vector<bool>(x.size(), true)};
  for (std::size_t i = 0; i < x.size(); ++i) {
    Vec up = base, down = base;
    up[i] += h;
    down[i] -= h;
    const Run ru = run(model, up), rd = run(model, down);
    g.valid[i] = ru.pattern == pattern && rd.pattern == pattern;
    g.value[i] = static_cast<double>((xent(ru.logits, label) - xent(rd.logits, label)) / (2.0L * h));
  }
  return g;
}

FdGradient param_gradient(const ares::Model& model, const std::vector<ares::Tensor>& xs,
                          const std::vector<std::size_t>& labels, double h) {
  std::vector<Vec> inputs;
  for (const auto& x : xs) inputs.push_back(widen(x));
  std::vector<std::vector<bool>> patterns;
  for (const auto& x : inputs) patterns.push_back(relu_pattern(model, x));

  auto batch_loss = [&](const ares::Model& m, bool& same) {
    long double s = 0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      const Run r = run(m, inputs[k]);
      if (r.pattern != patterns[k]) same = false;
      s += xent(r.logits, labels[k]);
    }
    return s / static_cast<long double>(inputs.size());
  };

  FdGradient g;
  ares::Model work = model;
  for (std::size_t d = 0; d < work.params.dense.size(); ++d) {
    for (ares::Tensor* t : {&work.params.dense[d].weight, &work.params.dense[d].bias}) {
      for (std::size_t i = 0; i < t->size(); ++i) {
        const double orig = (*t)[i];
        bool same = true;
        (*t)[i] = orig + h;
        const long double up = batch_loss(work, same);
        (*t)[i] = orig - h;
        const long double down = batch_loss(work, same);
        (*t)[i] = orig;
        // The perturbed parameter is stored as a double; use the actual step.
        const long double step = (static_cast<long double>(orig + h) - static_cast<long double>(orig - h));
        g.value.push_back(static_cast<double>((up - down) / step));
        g.valid.push_back(same);
      }
    }
  }
  return g;
}

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / scale;
}

ares::Model random_mlp(const std::vector<std::size_t>& dims, ares::Rng& rng) {
  ares::Model m;
  m.spec.name = "random";
  m.spec.num_classes = dims.back();
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    if (k > 0) m.spec.layers.push_back(ares::LayerSpec::relu(dims[k]));
    m.spec.layers.push_back(ares::LayerSpec::dense(dims[k], dims[k + 1]));
    ares::DenseParams p{ares::Tensor({dims[k + 1], dims[k]}), ares::Tensor({dims[k + 1]})};
    for (std::size_t i = 0; i < p.weight.size(); ++i) p.weight[i] = rng.normal() / std::sqrt(double(dims[k]));
    for (std::size_t i = 0; i < p.bias.size(); ++i) p.bias[i] = 0.1 * rng.normal();
    m.params.dense.push_back(std::move(p));
  }
  return m;
}

LinearInstance random_linear_instance(ares::Rng& rng, std::size_t dim) {
  LinearInstance inst;
  inst.eps = rng.uniform(0.01, 0.2);
  inst.alpha = inst.eps / static_cast<double>(1 + rng.uniform_index(8));
  inst.alpha *= rng.uniform(0.7, 1.0);
  inst.model.spec = {"linear", {ares::LayerSpec::dense(dim, 2)}, 2};
  ares::DenseParams p{ares::Tensor({2, dim}), ares::Tensor({2})};
  for (std::size_t i = 0; i < p.weight.size(); ++i) p.weight[i] = rng.normal();
  p.bias[0] = rng.normal();
  p.bias[1] = rng.normal();
  inst.x0 = ares::Tensor({dim});
  for (std::size_t i = 0; i < dim; ++i) inst.x0[i] = rng.uniform(inst.eps, 1.0 - inst.eps);

  long double z[2];
  for (std::size_t c = 0; c < 2; ++c) {
    z[c] = p.bias[c];
    for (std::size_t i = 0; i < dim; ++i) z[c] += static_cast<long double>(p.weight[c * dim + i]) * inst.x0[i];
  }
  inst.label = z[1] > z[0] ? 1 : 0;
  inst.margin = z[inst.label] - z[1 - inst.label];
  inst.l1 = 0;
  for (std::size_t i = 0; i < dim; ++i) {
    inst.l1 += std::abs(static_cast<long double>(p.weight[dim + i]) - p.weight[i]);
  }
  inst.model.params.dense.push_back(std::move(p));
  return inst;
}

bool linear_attack_succeeds(const LinearInstance& inst) { return inst.margin < inst.eps * inst.l1; }

int linear_steps_to_flip(const LinearInstance& inst) {
  // Each step lowers the margin by alpha * l1 until the ball edge is reached.
  const long double needed = inst.margin / inst.l1;
  return static_cast<int>(std::floor(needed / inst.alpha)) + 1;
}

Moments mean_ci95(const std::vector<double>& values) {
  Moments m;
  const auto n = static_cast<long double>(values.size());
  for (double v : values) m.mean += v;
  m.mean /= n;
  if (values.size() > 1) {
    long double ss = 0;
    for (double v : values) ss += (v - m.mean) * (v - m.mean);
    m.sample_std = std::sqrt(ss / (n - 1));
    m.ci95_half_width = 1.96L * m.sample_std / std::sqrt(n);
  }
  return m;
}

}  // namespace oracle
