#include "sentirag/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "sentirag/error.hpp"
#include "sentirag/text.hpp"

namespace sentirag {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;
constexpr int kCheckpointVersion = 1;

std::vector<std::size_t> layers(std::size_t in, const std::vector<std::size_t>& hidden,
                                std::size_t out) {
  std::vector<std::size_t> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

// ----- environment -----

std::vector<double> EnvState::vector() const {
  std::vector<double> out(weights);
  out.insert(out.end(), features.begin(), features.end());
  return out;
}

SourceWeightEnv::SourceWeightEnv(std::span<const TestItem> dataset, const RagPipeline& pipeline,
                                 ClassifierBackend& backend, SourceWeights initial,
                                 EnvConfig config)
    : dataset_(dataset),
      pipeline_(pipeline),
      backend_(backend),
      initial_(std::move(initial)),
      config_(config) {
  if (initial_.empty()) throw ConfigError("environment needs at least one source");
  if (config_.accuracy_window == 0) throw ConfigError("accuracy window must be positive");
}

const TestItem* SourceWeightEnv::current_item() const {
  return pos_ < dataset_.size() ? &dataset_[pos_] : nullptr;
}

void SourceWeightEnv::skip_unusable() {
  while (pos_ < dataset_.size()) {
    const auto& item = dataset_[pos_];
    bool unknown = item.truth == SentimentLabel::Unknown;
    bool in_zone = config_.neutral_zone_rewards &&
                   (!item.next_day_return || std::abs(*item.next_day_return) <= config_.zone);
    if (!unknown && !in_zone) break;
    ++pos_;
  }
}

EnvState SourceWeightEnv::observe(std::vector<double> weights) const {
  EnvState s;
  s.weights = std::move(weights);
  s.features.assign(kEnvFeatureCount, 0.0);
  if (!recent_.empty())
    s.features[0] = static_cast<double>(std::count_if(recent_.begin(), recent_.end(),
                                                      [](double r) { return r > 0.0; })) /
                    static_cast<double>(recent_.size());
  if (const TestItem* item = current_item()) {
    auto pol = pipeline_.lexicon().polarities(item->query.headline);
    if (pol == std::set<CuePolarity>{CuePolarity::Positive})
      s.features[1] = 1.0;
    else if (pol == std::set<CuePolarity>{CuePolarity::Negative})
      s.features[2] = 1.0;
    else
      s.features[3] = 1.0;
  }
  s.features[4] = static_cast<double>(pos_) / static_cast<double>(dataset_.size());
  return s;
}

EnvState SourceWeightEnv::reset(std::uint64_t seed) {
  if (dataset_.empty()) throw InputError("environment dataset is empty");
  pos_ = 0;
  recent_.clear();
  episode_seed_ = seed;
  skip_unusable();
  if (pos_ == dataset_.size()) throw InputError("environment dataset has no usable labeled items");
  return observe(initial_.values());
}

StepResult SourceWeightEnv::step(std::span<const double> action_weights) {
  const TestItem* item = current_item();
  if (item == nullptr) throw InputError("episode is over; call reset()");
  std::vector<double> action(action_weights.begin(), action_weights.end());
  if (action.size() != initial_.size()) throw InputError("action has the wrong dimension");
  SourceWeights weights(initial_.names(), action);

  StepResult out;
  auto rec = predict_item(*item, pipeline_, backend_, weights,
                          query_stream(episode_seed_, item->query.id));
  if (rec.predicted) {
    double r = *rec.predicted == item->truth ? 1.0 : -1.0;
    out.reward = r;
    recent_.push_back(r);
    if (recent_.size() > config_.accuracy_window) recent_.pop_front();
  } else {
    out.error = rec.error;
  }
  ++pos_;
  skip_unusable();
  out.done = pos_ >= dataset_.size();
  out.next_state = observe(std::move(action));
  return out;
}

// ----- objective pieces -----

double advantage(double reward, double gamma, double v_next, double v_curr) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InputError("discount must lie in [0, 1]");
  return reward + gamma * v_next - v_curr;
}

double clipped_objective(double ratio, double adv, double eps) {
  if (!(ratio > 0.0)) throw InputError("probability ratio must be > 0");
  if (!(eps > 0.0)) throw InputError("clip range must be > 0");
  double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
  return std::min(ratio * adv, clipped * adv);
}

// ----- networks -----

GaussianSoftmaxPolicy::GaussianSoftmaxPolicy(std::size_t state_dim, std::size_t num_sources,
                                             std::vector<std::size_t> hidden, Rng& rng,
                                             double init_log_std)
    : net_(layers(state_dim, hidden, num_sources)) {
  params_ = net_.init_params(rng, 0.01);
  params_.insert(params_.end(), num_sources, init_log_std);
}

GaussianSoftmaxPolicy::GaussianSoftmaxPolicy(std::size_t state_dim, std::size_t num_sources,
                                             std::vector<std::size_t> hidden,
                                             std::vector<double> params)
    : net_(layers(state_dim, hidden, num_sources)), params_(std::move(params)) {
  if (params_.size() != net_.num_params() + num_sources)
    throw InputError("policy parameter count does not match the architecture");
}

std::vector<double> GaussianSoftmaxPolicy::mean_logits(std::span<const double> state) const {
  return net_.forward(std::span(params_).first(net_.num_params()), state);
}

std::vector<double> GaussianSoftmaxPolicy::mean_action(std::span<const double> state) const {
  return softmax(mean_logits(state));
}

GaussianSoftmaxPolicy::Sample GaussianSoftmaxPolicy::sample(std::span<const double> state,
                                                            Rng& rng) const {
  Sample s;
  s.logits = mean_logits(state);
  std::size_t np = net_.num_params();
  for (std::size_t j = 0; j < s.logits.size(); ++j)
    s.logits[j] += std::exp(params_[np + j]) * rng.normal();
  s.log_prob = log_prob(params_, state, s.logits);
  s.weights = softmax(s.logits);
  return s;
}

double GaussianSoftmaxPolicy::log_prob(std::span<const double> params,
                                       std::span<const double> state,
                                       std::span<const double> logits) const {
  std::size_t np = net_.num_params();
  auto mu = net_.forward(params.first(np), state);
  double lp = 0.0;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    double log_std = params[np + j];
    double u = (logits[j] - mu[j]) / std::exp(log_std);
    lp += -0.5 * u * u - log_std - kLogSqrt2Pi;
  }
  return lp;
}

ValueFunction::ValueFunction(std::size_t state_dim, std::vector<std::size_t> hidden, Rng& rng)
    : net_(layers(state_dim, hidden, 1)) {
  params_ = net_.init_params(rng, 1.0);
}

ValueFunction::ValueFunction(std::size_t state_dim, std::vector<std::size_t> hidden,
                             std::vector<double> params)
    : net_(layers(state_dim, hidden, 1)), params_(std::move(params)) {
  if (params_.size() != net_.num_params())
    throw InputError("value parameter count does not match the architecture");
}

double ValueFunction::value(std::span<const double> state) const { return value(params_, state); }

double ValueFunction::value(std::span<const double> params, std::span<const double> state) const {
  return net_.forward(params, state).front();
}

double surrogate_objective(const GaussianSoftmaxPolicy& policy, std::span<const double> params,
                           std::span<const TrajectoryStep> batch,
                           std::span<const double> advantages, double eps,
                           std::span<double> grad) {
  if (batch.empty()) return 0.0;
  const Mlp& net = policy.net();
  std::size_t np = net.num_params();
  std::size_t na = policy.num_sources();
  double inv_n = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  Mlp::Cache cache;
  std::vector<double> dmu(na);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& st = batch[i];
    double adv = advantages[i];
    auto mu = net.forward(params.first(np), st.state, grad.empty() ? nullptr : &cache);
    double lp = 0.0;
    for (std::size_t j = 0; j < na; ++j) {
      double log_std = params[np + j];
      double u = (st.logits[j] - mu[j]) / std::exp(log_std);
      lp += -0.5 * u * u - log_std - kLogSqrt2Pi;
    }
    double ratio = std::exp(lp - st.log_prob);
    double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
    double unclipped_term = ratio * adv;
    double clipped_term = clipped * adv;
    total += std::min(unclipped_term, clipped_term);
    if (grad.empty()) continue;
    // The clipped branch is constant in the parameters.
    if (unclipped_term > clipped_term) continue;
    double dlp = adv * ratio * inv_n;
    for (std::size_t j = 0; j < na; ++j) {
      double sigma = std::exp(params[np + j]);
      double diff = st.logits[j] - mu[j];
      dmu[j] = dlp * diff / (sigma * sigma);
      grad[np + j] += dlp * (diff * diff / (sigma * sigma) - 1.0);
    }
    net.backward(params.first(np), cache, dmu, grad.first(np));
  }
  return total * inv_n;
}

double value_loss(const ValueFunction& value, std::span<const double> params,
                  std::span<const TrajectoryStep> batch, std::span<const double> targets,
                  std::span<double> grad) {
  if (batch.empty()) return 0.0;
  const Mlp& net = value.net();
  double inv_n = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  Mlp::Cache cache;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    double v = net.forward(params, batch[i].state, grad.empty() ? nullptr : &cache).front();
    double err = v - targets[i];
    total += err * err;
    if (!grad.empty()) {
      double dv = 2.0 * err * inv_n;
      net.backward(params, cache, std::span(&dv, 1), grad);
    }
  }
  return total * inv_n;
}

// ----- training -----

void PpoHyperparams::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("ppo.gamma must lie in [0, 1]");
  if (!(clip > 0.0)) throw ConfigError("ppo.clip must be > 0");
  if (!(policy_lr > 0.0) || !(value_lr > 0.0)) throw ConfigError("ppo learning rates must be > 0");
  if (batch_size == 0 || minibatch_size == 0 || epochs == 0)
    throw ConfigError("ppo batch, minibatch and epochs must be positive");
  if (hidden.empty()) throw ConfigError("ppo.hidden needs at least one layer");
}

PpoResult ppo_train(SourceWeightEnv& env, const PpoHyperparams& hp) {
  hp.validate();
  Rng rng(hp.seed);
  PpoResult result;
  result.policy = GaussianSoftmaxPolicy(env.state_dim(), env.num_sources(), hp.hidden, rng,
                                        hp.init_log_std);
  result.value = ValueFunction(env.state_dim(), hp.hidden, rng);
  if (hp.total_steps == 0) return result;

  auto& theta = result.policy.params();
  auto& phi = result.value.params();
  Adam policy_opt(theta.size(), hp.policy_lr);
  Adam value_opt(phi.size(), hp.value_lr);

  std::uint64_t episode = 0;
  EnvState state = env.reset(mix_seed(hp.seed, episode++));
  std::vector<double> pgrad(theta.size()), vgrad(phi.size());

  for (std::size_t batch_no = 0; result.steps < hp.total_steps; ++batch_no) {
    std::size_t target = std::min(hp.batch_size, hp.total_steps - result.steps);
    Trajectory traj;
    std::vector<EnvState> states;
    std::size_t dry = 0;
    while (traj.size() < target) {
      auto s = state.vector();
      auto act = result.policy.sample(s, rng);
      double v = result.value.value(s);
      auto res = env.step(act.weights);
      if (res.reward) {
        traj.push_back({std::move(s), res.next_state.vector(), std::move(act.logits), act.log_prob,
                        *res.reward, v});
        states.push_back(state);
        dry = 0;
      } else if (++dry > 10000) {
        throw Error(fmt::format("environment produced no rewarded step in 10000 attempts; last "
                                "error: {}",
                                res.error));
      }
      state = res.done ? env.reset(mix_seed(hp.seed, episode++)) : std::move(res.next_state);
    }
    result.steps += traj.size();

    std::vector<double> adv(traj.size()), targets(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
      double v_next = result.value.value(traj[i].next_state);
      adv[i] = advantage(traj[i].reward, hp.gamma, v_next, traj[i].value);
      targets[i] = traj[i].reward + hp.gamma * v_next;
    }

    std::vector<std::size_t> order(traj.size());
    Trajectory mb;
    std::vector<double> mb_adv, mb_targets;
    for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
      std::iota(order.begin(), order.end(), 0);
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
      for (std::size_t start = 0; start < order.size(); start += hp.minibatch_size) {
        std::size_t end = std::min(order.size(), start + hp.minibatch_size);
        mb.clear();
        mb_adv.clear();
        mb_targets.clear();
        for (std::size_t k = start; k < end; ++k) {
          mb.push_back(traj[order[k]]);
          mb_adv.push_back(adv[order[k]]);
          mb_targets.push_back(targets[order[k]]);
        }
        std::fill(pgrad.begin(), pgrad.end(), 0.0);
        surrogate_objective(result.policy, theta, mb, mb_adv, hp.clip, pgrad);
        for (double& g : pgrad) g = -g;  // ascent
        std::fill(vgrad.begin(), vgrad.end(), 0.0);
        value_loss(result.value, phi, mb, mb_targets, vgrad);
        if (!all_finite(pgrad) || !all_finite(vgrad))
          throw DivergenceError(fmt::format("non-finite gradient in batch {} epoch {}", batch_no,
                                            epoch));
        policy_opt.step(theta, pgrad);
        value_opt.step(phi, vgrad);
      }
    }

    BatchReport rep;
    rep.batch = batch_no;
    rep.mean_reward =
        std::accumulate(traj.begin(), traj.end(), 0.0,
                        [](double acc, const TrajectoryStep& s) { return acc + s.reward; }) /
        static_cast<double>(traj.size());
    rep.policy_objective = surrogate_objective(result.policy, theta, traj, adv, hp.clip);
    rep.value_loss = value_loss(result.value, phi, traj, targets);
    if (!std::isfinite(rep.policy_objective) || !std::isfinite(rep.value_loss) ||
        !all_finite(theta) || !all_finite(phi))
      throw DivergenceError(fmt::format(
          "training diverged at batch {}: objective {}, value loss {}", batch_no,
          rep.policy_objective, rep.value_loss));
    result.report.push_back(rep);
    result.last_states = std::move(states);
  }
  return result;
}

SourceWeights extract_policy_weights(const GaussianSoftmaxPolicy& policy,
                                     std::span<const EnvState> states,
                                     const std::vector<std::string>& sources) {
  if (states.empty()) throw InputError("policy weight extraction needs at least one state");
  if (sources.size() != policy.num_sources())
    throw InputError("source list does not match the policy's action size");
  std::vector<double> mean(policy.num_sources(), 0.0);
  for (const auto& s : states) {
    auto a = policy.mean_action(s.vector());
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += a[j];
  }
  for (double& m : mean) m /= static_cast<double>(states.size());
  return SourceWeights::normalized(sources, std::move(mean));
}

double RolloutResult::mean_reward() const {
  if (rewards.empty()) return 0.0;
  return std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(rewards.size());
}

RolloutResult rollout(SourceWeightEnv& env, std::uint64_t seed, std::size_t max_steps,
                      const GaussianSoftmaxPolicy* policy, const std::vector<double>& fixed) {
  RolloutResult out;
  std::uint64_t episode = 0;
  EnvState state = env.reset(mix_seed(seed, episode++));
  std::size_t dry = 0;
  while (out.rewards.size() < max_steps) {
    auto action = policy ? policy->mean_action(state.vector()) : fixed;
    auto res = env.step(action);
    if (res.reward) {
      out.states.push_back(state);
      out.rewards.push_back(*res.reward);
      dry = 0;
    } else if (++dry > 10000) {
      throw Error(fmt::format("rollout produced no rewarded step: {}", res.error));
    }
    state = res.done ? env.reset(mix_seed(seed, episode++)) : std::move(res.next_state);
  }
  return out;
}

// ----- checkpoints -----

std::string hyperparams_hash(const PpoHyperparams& hp, const std::vector<std::string>& sources,
                             const EnvConfig& env) {
  std::string canon = fmt::format(
      "gamma={:.17g};clip={:.17g};plr={:.17g};vlr={:.17g};batch={};mb={};epochs={};steps={};"
      "log_std={:.17g};seed={};acc_window={};zone_rewards={};zone={:.17g}",
      hp.gamma, hp.clip, hp.policy_lr, hp.value_lr, hp.batch_size, hp.minibatch_size, hp.epochs,
      hp.total_steps, hp.init_log_std, hp.seed, env.accuracy_window, env.neutral_zone_rewards,
      env.zone);
  for (auto h : hp.hidden) canon += fmt::format(";h={}", h);
  for (const auto& s : sources) canon += ";src=" + s;
  return fmt::format("{:016x}", fnv1a(canon));
}

void save_checkpoint(const std::string& path, const PolicyCheckpoint& ckpt) {
  const auto& hp = ckpt.hyperparams;
  nlohmann::json j;
  j["format"] = "sentirag-policy";
  j["version"] = kCheckpointVersion;
  j["sources"] = ckpt.sources;
  j["architecture"] = {{"state_dim", ckpt.policy.state_dim()},
                       {"num_sources", ckpt.policy.num_sources()},
                       {"hidden", hp.hidden}};
  j["hyperparams"] = {{"gamma", hp.gamma},
                      {"clip", hp.clip},
                      {"policy_lr", hp.policy_lr},
                      {"value_lr", hp.value_lr},
                      {"batch_size", hp.batch_size},
                      {"minibatch_size", hp.minibatch_size},
                      {"epochs", hp.epochs},
                      {"total_steps", hp.total_steps},
                      {"init_log_std", hp.init_log_std},
                      {"seed", hp.seed}};
  j["config_hash"] = ckpt.config_hash;
  j["policy"] = ckpt.policy.params();
  j["value"] = ckpt.value.params();
  std::ofstream out(path);
  if (!out) throw InputError(fmt::format("cannot write checkpoint `{}`", path));
  out << j.dump(1) << '\n';
}

PolicyCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open checkpoint `{}`", path));
  try {
    auto j = nlohmann::json::parse(in);
    if (j.at("format") != "sentirag-policy")
      throw InputError("not a policy checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw InputError(fmt::format("unsupported checkpoint version {}", j.at("version").dump()));
    PolicyCheckpoint ck;
    ck.sources = j.at("sources").get<std::vector<std::string>>();
    const auto& arch = j.at("architecture");
    auto state_dim = arch.at("state_dim").get<std::size_t>();
    auto num_sources = arch.at("num_sources").get<std::size_t>();
    auto hidden = arch.at("hidden").get<std::vector<std::size_t>>();
    if (num_sources != ck.sources.size()) throw InputError("source count mismatch");
    const auto& h = j.at("hyperparams");
    ck.hyperparams.gamma = h.at("gamma");
    ck.hyperparams.clip = h.at("clip");
    ck.hyperparams.policy_lr = h.at("policy_lr");
    ck.hyperparams.value_lr = h.at("value_lr");
    ck.hyperparams.batch_size = h.at("batch_size");
    ck.hyperparams.minibatch_size = h.at("minibatch_size");
    ck.hyperparams.epochs = h.at("epochs");
    ck.hyperparams.total_steps = h.at("total_steps");
    ck.hyperparams.init_log_std = h.at("init_log_std");
    ck.hyperparams.seed = h.at("seed");
    ck.hyperparams.hidden = hidden;
    ck.config_hash = j.at("config_hash").get<std::string>();
    ck.policy = GaussianSoftmaxPolicy(state_dim, num_sources, hidden,
                                      j.at("policy").get<std::vector<double>>());
    ck.value = ValueFunction(state_dim, hidden, j.at("value").get<std::vector<double>>());
    if (!all_finite(ck.policy.params()) || !all_finite(ck.value.params()))
      throw InputError("checkpoint holds non-finite parameters");
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("checkpoint `{}`: {}", path, e.what()));
  } catch (const InputError& e) {
    throw InputError(fmt::format("checkpoint `{}`: {}", path, e.what()));
  }
}

void write_training_report(const std::string& path, std::span<const BatchReport> report) {
  std::ofstream out(path);
  if (!out) throw InputError(fmt::format("cannot write `{}`", path));
  out << "batch,mean_reward,policy_loss,value_loss\n";
  for (const auto& r : report)
    out << fmt::format("{},{:.17g},{:.17g},{:.17g}\n", r.batch, r.mean_reward, -r.policy_objective,
                       r.value_loss);
}

}  // namespace sentirag
