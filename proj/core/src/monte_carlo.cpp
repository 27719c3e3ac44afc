#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <random>
#include <thread>

#include "momentprop/errors.hpp"
#include "momentprop/oracle.hpp"

namespace momentprop {
namespace {

// Straight-line program evaluating one update expression over a block of samples.
// Every instruction writes its own register.
struct Program {
  enum class Code : std::uint8_t { Const, State, Dist, Add, Sub, Mul, Neg, Pow, SinState, CosState, SinDist, CosDist };
  struct Instr {
    Code code;
    std::uint32_t a = 0, b = 0;
    double value = 0.0;
  };
  std::vector<Instr> code;

  std::uint32_t emit(Instr in) {
    code.push_back(in);
    return static_cast<std::uint32_t>(code.size() - 1);
  }

  std::uint32_t compile(const Expr& e) {
    const auto sym_code = [](const Symbol& s, Code on_state, Code on_dist) {
      return s.kind == Symbol::Kind::State ? on_state : on_dist;
    };
    switch (e.op()) {
      case Expr::Op::Number:
        return emit({Code::Const, 0, 0, e.value().get_d()});
      case Expr::Op::Var:
        return emit({sym_code(e.symbol(), Code::State, Code::Dist), static_cast<std::uint32_t>(e.symbol().index)});
      case Expr::Op::Sin:
        return emit({sym_code(e.symbol(), Code::SinState, Code::SinDist), static_cast<std::uint32_t>(e.symbol().index)});
      case Expr::Op::Cos:
        return emit({sym_code(e.symbol(), Code::CosState, Code::CosDist), static_cast<std::uint32_t>(e.symbol().index)});
      case Expr::Op::Neg:
        return emit({Code::Neg, compile(e.args()[0])});
      case Expr::Op::Pow:
        return emit({Code::Pow, compile(e.args()[0]), e.exponent()});
      case Expr::Op::Add:
      case Expr::Op::Sub:
      case Expr::Op::Mul: {
        const auto l = compile(e.args()[0]);
        const auto r = compile(e.args()[1]);
        const Code c = e.op() == Expr::Op::Add ? Code::Add : e.op() == Expr::Op::Sub ? Code::Sub : Code::Mul;
        return emit({c, l, r});
      }
    }
    throw std::logic_error("unhandled expression node");
  }

  // Result is left in regs.back().
  void run(std::size_t n, const std::vector<std::vector<double>>& state, const std::vector<std::vector<double>>& dist,
           std::vector<std::vector<double>>& regs) const {
    regs.resize(code.size());
    for (std::size_t k = 0; k < code.size(); ++k) {
      const Instr& in = code[k];
      auto& out = regs[k];
      out.resize(n);
      switch (in.code) {
        case Code::Const:
          std::fill(out.begin(), out.end(), in.value);
          break;
        case Code::State:
          std::copy_n(state[in.a].begin(), n, out.begin());
          break;
        case Code::Dist:
          std::copy_n(dist[in.a].begin(), n, out.begin());
          break;
        case Code::SinState:
          for (std::size_t i = 0; i < n; ++i) out[i] = std::sin(state[in.a][i]);
          break;
        case Code::CosState:
          for (std::size_t i = 0; i < n; ++i) out[i] = std::cos(state[in.a][i]);
          break;
        case Code::SinDist:
          for (std::size_t i = 0; i < n; ++i) out[i] = std::sin(dist[in.a][i]);
          break;
        case Code::CosDist:
          for (std::size_t i = 0; i < n; ++i) out[i] = std::cos(dist[in.a][i]);
          break;
        case Code::Add:
          for (std::size_t i = 0; i < n; ++i) out[i] = regs[in.a][i] + regs[in.b][i];
          break;
        case Code::Sub:
          for (std::size_t i = 0; i < n; ++i) out[i] = regs[in.a][i] - regs[in.b][i];
          break;
        case Code::Mul:
          for (std::size_t i = 0; i < n; ++i) out[i] = regs[in.a][i] * regs[in.b][i];
          break;
        case Code::Neg:
          for (std::size_t i = 0; i < n; ++i) out[i] = -regs[in.a][i];
          break;
        case Code::Pow:
          for (std::size_t i = 0; i < n; ++i) {
            double v = 1.0;
            for (std::uint32_t p = 0; p < in.b; ++p) v *= regs[in.a][i];
            out[i] = v;
          }
          break;
      }
    }
  }
};

// Holds one std distribution object per disturbance so that cached state
// (e.g. the second normal of a pair) is reused within a batch.
class Sampler {
 public:
  explicit Sampler(const Distribution& d) : dist_(d) {
    std::visit(
        [this](const auto& k) {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Gaussian>) {
            normal_ = std::normal_distribution<double>(k.mean, std::sqrt(k.variance));
          } else if constexpr (std::is_same_v<T, Uniform>) {
            uniform_ = std::uniform_real_distribution<double>(k.lower, k.upper);
          } else if constexpr (std::is_same_v<T, BetaDist>) {
            gamma_a_ = std::gamma_distribution<double>(k.a, 1.0);
            gamma_b_ = std::gamma_distribution<double>(k.b, 1.0);
          }
        },
        d.kind());
  }

  template <class Rng>
  void fill(Rng& rng, double shift, std::span<double> out) {
    switch (dist_.kind().index()) {
      case 0: {
        const double v = std::get<Degenerate>(dist_.kind()).value + shift;
        std::fill(out.begin(), out.end(), v);
        break;
      }
      case 1:
        for (double& v : out) v = normal_(rng) + shift;
        break;
      case 2:
        for (double& v : out) v = uniform_(rng) + shift;
        break;
      default:
        for (double& v : out) {
          const double x = gamma_a_(rng);
          const double y = gamma_b_(rng);
          v = x / (x + y) + shift;
        }
        break;
    }
  }

 private:
  Distribution dist_;
  std::normal_distribution<double> normal_;
  std::uniform_real_distribution<double> uniform_;
  std::gamma_distribution<double> gamma_a_, gamma_b_;
};

struct EncodedSlot {
  std::size_t state = 0;
  enum class Kind : std::uint8_t { Raw, Cos, Sin } kind = Kind::Raw;
};

std::vector<EncodedSlot> encoded_slots(const SystemSpec& spec) {
  std::vector<EncodedSlot> out;
  for (std::size_t i = 0; i < spec.state_vars.size(); ++i) {
    if (spec.is_angle[i]) {
      out.push_back({i, EncodedSlot::Kind::Cos});
      out.push_back({i, EncodedSlot::Kind::Sin});
    } else {
      out.push_back({i, EncodedSlot::Kind::Raw});
    }
  }
  return out;
}

void encode_block(const std::vector<EncodedSlot>& slots, SampleBlock& block) {
  block.encoded.resize(slots.size());
  for (std::size_t j = 0; j < slots.size(); ++j) {
    auto& out = block.encoded[j];
    out.resize(block.count);
    const auto& src = block.state[slots[j].state];
    switch (slots[j].kind) {
      case EncodedSlot::Kind::Raw:
        std::copy_n(src.begin(), block.count, out.begin());
        break;
      case EncodedSlot::Kind::Cos:
        for (std::size_t i = 0; i < block.count; ++i) out[i] = std::cos(src[i]);
        break;
      case EncodedSlot::Kind::Sin:
        for (std::size_t i = 0; i < block.count; ++i) out[i] = std::sin(src[i]);
        break;
    }
  }
}

// Chan et al. pairwise combination of (count, mean, M2).
struct Accum {
  double n = 0.0, mean = 0.0, m2 = 0.0;

  void merge(const Accum& o) {
    if (o.n == 0.0) return;
    if (n == 0.0) {
      *this = o;
      return;
    }
    const double total = n + o.n;
    const double delta = o.mean - mean;
    mean += delta * o.n / total;
    m2 += o.m2 + delta * delta * n * o.n / total;
    n = total;
  }
};

Accum block_accum(std::span<const double> v) {
  Accum a;
  a.n = static_cast<double>(v.size());
  if (v.empty()) return a;
  double s = 0.0;
  for (double x : v) s += x;
  a.mean = s / a.n;
  for (double x : v) a.m2 += (x - a.mean) * (x - a.mean);
  return a;
}

// Co-moment combination for covariance: C = sum (a - mean_a)(b - mean_b).
struct CoAccum {
  double n = 0.0, mean_a = 0.0, mean_b = 0.0, c = 0.0;
  Accum products;  // of within-block deviation products, for the standard error

  void merge(const CoAccum& o) {
    if (o.n == 0.0) return;
    if (n == 0.0) {
      *this = o;
      return;
    }
    const double total = n + o.n;
    const double da = o.mean_a - mean_a;
    const double db = o.mean_b - mean_b;
    c += o.c + da * db * n * o.n / total;
    mean_a += da * o.n / total;
    mean_b += db * o.n / total;
    n = total;
    products.merge(o.products);
  }
};

}  // namespace

std::vector<double> encode_point(const SystemSpec& spec, std::span<const double> x) {
  if (x.size() != spec.state_vars.size()) {
    throw SpecError("initial state needs " + std::to_string(spec.state_vars.size()) + " values");
  }
  std::vector<double> out;
  for (const auto& slot : encoded_slots(spec)) {
    const double v = x[slot.state];
    out.push_back(slot.kind == EncodedSlot::Kind::Raw ? v : slot.kind == EncodedSlot::Kind::Cos ? std::cos(v) : std::sin(v));
  }
  return out;
}

std::size_t batch_count(const RolloutOptions& options) {
  if (options.batch_size == 0) throw SpecError("batch size must be positive");
  return (options.samples + options.batch_size - 1) / options.batch_size;
}

void rollout(const SystemSpec& spec, const DisturbanceModel& model, std::span<const double> x0,
             const RolloutOptions& options, const BatchVisitor& visit) {
  const std::size_t nx = spec.state_vars.size();
  const std::size_t nw = spec.disturbance_vars.size();
  if (x0.size() != nx) throw SpecError("initial state needs " + std::to_string(nx) + " values");
  for (const auto& w : spec.disturbance_vars) {
    if (!model.contains(w)) throw SpecError("no distribution for disturbance '" + w + "'");
  }
  if (options.steps > 0 && model.horizon() < options.steps) {
    throw PropagationError("shift schedules are shorter than the horizon");
  }

  std::vector<Program> programs(nx);
  for (std::size_t i = 0; i < nx; ++i) programs[i].compile(spec.updates[i]);
  const auto slots = encoded_slots(spec);
  std::vector<std::vector<double>> shifts(nw);
  for (std::size_t k = 0; k < nw; ++k) {
    for (std::size_t t = 0; t < options.steps; ++t) shifts[k].push_back(model.shift(spec.disturbance_vars[k], t));
  }

  const std::size_t batches = batch_count(options);
  const auto run_batch = [&](std::size_t b) {
    const std::size_t n = std::min(options.batch_size, options.samples - b * options.batch_size);
    std::seed_seq seq{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32U),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32U)};
    std::mt19937_64 rng(seq);
    std::vector<Sampler> samplers;
    for (const auto& w : spec.disturbance_vars) samplers.emplace_back(model.distribution(w));

    SampleBlock block;
    block.count = n;
    block.state.assign(nx, {});
    for (std::size_t i = 0; i < nx; ++i) block.state[i].assign(n, x0[i]);
    std::vector<std::vector<double>> dist(nw, std::vector<double>(n));
    std::vector<std::vector<double>> next(nx);
    std::vector<std::vector<double>> regs;

    encode_block(slots, block);
    visit(b, 0, block);
    for (std::size_t t = 0; t < options.steps; ++t) {
      for (std::size_t k = 0; k < nw; ++k) samplers[k].fill(rng, shifts[k][t], dist[k]);
      for (std::size_t i = 0; i < nx; ++i) {
        programs[i].run(n, block.state, dist, regs);
        next[i].swap(regs.back());
      }
      block.state.swap(next);
      encode_block(slots, block);
      visit(b, t + 1, block);
    }
  };

  unsigned threads = options.threads == 0 ? std::max(1U, std::thread::hardware_concurrency()) : options.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, batches));
  if (threads <= 1) {
    for (std::size_t b = 0; b < batches; ++b) run_batch(b);
    return;
  }
  std::atomic<std::size_t> next_batch{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < threads; ++k) {
      pool.emplace_back([&] {
        for (std::size_t b = next_batch++; b < batches; b = next_batch++) {
          try {
            run_batch(b);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

std::size_t McEstimate::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw SpecError("no Monte Carlo column '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

std::string covariance_name(const std::string& a, const std::string& b) { return "cov(" + a + ";" + b + ")"; }

McRequest default_request(const SystemSpec& spec, const MomentStateSystem* system) {
  McRequest req;
  const auto names = spec.encoded_state_names();
  const std::size_t n = names.size();
  if (system != nullptr) {
    req.moments.assign(system->basis.begin(), system->basis.end());
  } else {
    for (std::size_t i = 0; i < n; ++i) req.moments.push_back(MultiIndex::unit(n, i));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) req.moments.push_back(MultiIndex::unit(n, i) + MultiIndex::unit(n, j));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) req.covariances.emplace_back(i, j);
  }
  return req;
}

McEstimate mc_simulate(const SystemSpec& spec, const DisturbanceModel& model, std::span<const double> x0,
                       const McRequest& request, const RolloutOptions& options) {
  if (options.samples < 2) throw SpecError("Monte Carlo needs at least two samples");
  const auto names = spec.encoded_state_names();
  for (const auto& m : request.moments) {
    if (m.size() != names.size()) throw SpecError("requested moment has the wrong number of variables");
  }
  for (const auto& [a, b] : request.covariances) {
    if (a >= names.size() || b >= names.size()) throw SpecError("covariance pair out of range");
  }

  const std::size_t nm = request.moments.size();
  const std::size_t nc = request.covariances.size();
  const std::size_t batches = batch_count(options);
  const std::size_t steps = options.steps;
  // Per batch, per step: moment accumulators then covariance accumulators.
  std::vector<std::vector<Accum>> moment_acc(batches, std::vector<Accum>((steps + 1) * nm));
  std::vector<std::vector<CoAccum>> cov_acc(batches, std::vector<CoAccum>((steps + 1) * nc));

  // Monomials as (variable, power) lists.
  std::vector<std::vector<std::pair<std::size_t, std::uint32_t>>> factors(nm);
  for (std::size_t k = 0; k < nm; ++k) {
    for (std::size_t j = 0; j < request.moments[k].size(); ++j) {
      if (request.moments[k][j] > 0) factors[k].emplace_back(j, request.moments[k][j]);
    }
  }

  rollout(spec, model, x0, options, [&](std::size_t b, std::size_t t, const SampleBlock& block) {
    const std::size_t n = block.count;
    std::vector<double> values(n);
    for (std::size_t k = 0; k < nm; ++k) {
      std::fill(values.begin(), values.end(), 1.0);
      for (const auto& [j, p] : factors[k]) {
        const auto& col = block.encoded[j];
        for (std::size_t i = 0; i < n; ++i) {
          double v = col[i];
          for (std::uint32_t q = 1; q < p; ++q) v *= col[i];
          values[i] *= v;
        }
      }
      moment_acc[b][t * nm + k] = block_accum(values);
    }
    for (std::size_t k = 0; k < nc; ++k) {
      const auto& ca = block.encoded[request.covariances[k].first];
      const auto& cb = block.encoded[request.covariances[k].second];
      CoAccum acc;
      acc.n = static_cast<double>(n);
      double sa = 0.0, sb = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        sa += ca[i];
        sb += cb[i];
      }
      acc.mean_a = sa / acc.n;
      acc.mean_b = sb / acc.n;
      for (std::size_t i = 0; i < n; ++i) values[i] = (ca[i] - acc.mean_a) * (cb[i] - acc.mean_b);
      for (double v : values) acc.c += v;
      acc.products = block_accum(values);
      cov_acc[b][t * nc + k] = acc;
    }
  });

  McEstimate est;
  est.samples = options.samples;
  for (const auto& m : request.moments) est.columns.push_back(m.monomial(names));
  for (const auto& [a, b] : request.covariances) est.columns.push_back(covariance_name(names[a], names[b]));
  const double n = static_cast<double>(options.samples);
  est.mean.assign(steps + 1, std::vector<double>(nm + nc));
  est.se.assign(steps + 1, std::vector<double>(nm + nc));
  for (std::size_t t = 0; t <= steps; ++t) {
    for (std::size_t k = 0; k < nm; ++k) {
      Accum total;
      for (std::size_t b = 0; b < batches; ++b) total.merge(moment_acc[b][t * nm + k]);
      est.mean[t][k] = total.mean;
      est.se[t][k] = std::sqrt(std::max(0.0, total.m2 / (n - 1.0)) / n);
    }
    for (std::size_t k = 0; k < nc; ++k) {
      CoAccum total;
      for (std::size_t b = 0; b < batches; ++b) total.merge(cov_acc[b][t * nc + k]);
      est.mean[t][nm + k] = total.c / (n - 1.0);
      est.se[t][nm + k] = std::sqrt(std::max(0.0, total.products.m2 / (n - 1.0)) / n);
    }
  }
  return est;
}

}  // namespace momentprop
