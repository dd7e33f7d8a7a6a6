#include "retype/model/train.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "retype/error.hpp"

namespace retype::model {

Json TrainOptions::to_json() const {
  return Json{{"epochs", epochs},       {"batch_size", batch_size},
              {"learning_rate", learning_rate}, {"clip_norm", clip_norm},
              {"beta1", beta1},         {"beta2", beta2},
              {"adam_eps", adam_eps},   {"min_type_count", min_type_count},
              {"seed", seed}};
}

TrainOptions TrainOptions::from_json(const Json& j) {
  TrainOptions o;
  auto num = [&](std::string_view f) {
    const Json& v = require(j, f);
    if (!v.is_number()) throw Error(ErrorKind::kValidation, "field '" + std::string(f) + "' must be a number");
    return v.get<double>();
  };
  o.epochs = require_uint(j, "epochs");
  o.batch_size = require_uint(j, "batch_size");
  o.learning_rate = num("learning_rate");
  o.clip_norm = num("clip_norm");
  o.beta1 = num("beta1");
  o.beta2 = num("beta2");
  o.adam_eps = num("adam_eps");
  o.min_type_count = require_uint(j, "min_type_count");
  o.seed = require_uint(j, "seed");
  return o;
}

SplitScore score_split(const Retyper& model, const std::vector<EncodedExample>& examples) {
  SplitScore s;
  std::size_t correct = 0;
  std::vector<std::vector<double>> probs;
  for (const auto& ex : examples) {
    s.loss += model.run(ex, nullptr, &probs);
    for (std::size_t j = 0; j < probs.size(); ++j) {
      const auto& p = probs[j];
      const auto best = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
      correct += ex.vars[j].gold_known && best == ex.vars[j].gold;
    }
    s.variables += ex.vars.size();
  }
  if (s.variables > 0) {
    s.loss /= static_cast<double>(s.variables);
    s.accuracy = static_cast<double>(correct) / static_cast<double>(s.variables);
  }
  return s;
}

namespace {

[[noreturn]] void diverged(const Retyper& model, std::size_t epoch, double loss) {
  throw Error(ErrorKind::kDivergence,
              "training diverged in epoch " + std::to_string(epoch) + " (loss " +
                  std::to_string(loss) + "); parameter norms: " + model.params().norms().dump());
}

}  // namespace

TrainResult train(const std::vector<LabeledExample>& train_split,
                  const std::vector<LabeledExample>& valid_split, const ModelConfig& config,
                  const TrainOptions& options) {
  if (train_split.empty()) throw Error(ErrorKind::kEmptyCorpus, "train split is empty");
  if (options.batch_size == 0) throw Error(ErrorKind::kValidation, "batch size must be positive");
  TypeLexicon lexicon = build_type_lexicon(train_split, options.min_type_count);
  TokenVocab vocab = TokenVocab::build(train_split);
  Retyper model(config, std::move(lexicon), std::move(vocab));
  model.set_invariant_checks(options.check_invariants);

  std::vector<EncodedExample> train_enc;
  std::vector<EncodedExample> valid_enc;
  for (const auto& ex : train_split) train_enc.push_back(model.encode(ex));
  for (const auto& ex : valid_split) valid_enc.push_back(model.encode(ex));

  TrainResult result{model, {}, 0};
  auto evaluate = [&](std::size_t epoch) {
    const auto tr = score_split(model, train_enc);
    if (!std::isfinite(tr.loss)) diverged(model, epoch, tr.loss);
    TrainLogRow row{epoch, tr.loss, std::nullopt};
    if (!valid_enc.empty()) row.valid_accuracy = score_split(model, valid_enc).accuracy;
    spdlog::info("epoch {}: train loss {:.6f}, valid accuracy {}", epoch, row.train_loss,
                 row.valid_accuracy ? std::to_string(*row.valid_accuracy) : "n/a");
    return row;
  };

  result.log.push_back(evaluate(0));
  double best = result.log.back().valid_accuracy.value_or(-1.0);

  Parameters grad(model.config());
  Parameters m1(model.config());
  Parameters m2(model.config());
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(train_enc.size());
  std::iota(order.begin(), order.end(), 0);
  std::uint64_t step = 0;

  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t stop = std::min(order.size(), start + options.batch_size);
      grad.zero();
      double loss = 0.0;
      std::size_t vars = 0;
      for (std::size_t i = start; i < stop; ++i) {
        const auto& ex = train_enc[order[i]];
        loss += model.run(ex, &grad);
        vars += ex.vars.size();
      }
      if (!std::isfinite(loss)) diverged(model, epoch, loss);
      if (vars == 0) continue;
      const double inv = 1.0 / static_cast<double>(vars);
      for (auto& t : grad.tensors) {
        for (auto& g : t.m.v) g *= inv;
      }
      const double norm = grad.global_norm();
      const double clip = norm > options.clip_norm ? options.clip_norm / norm : 1.0;
      ++step;
      const double c1 = 1.0 - std::pow(options.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(options.beta2, static_cast<double>(step));
      auto& params = model.params();
      for (std::size_t t = 0; t < params.tensors.size(); ++t) {
        auto& w = params.tensors[t].m.v;
        auto& g = grad.tensors[t].m.v;
        auto& a = m1.tensors[t].m.v;
        auto& b = m2.tensors[t].m.v;
        for (std::size_t i = 0; i < w.size(); ++i) {
          const double gi = g[i] * clip;
          a[i] = options.beta1 * a[i] + (1.0 - options.beta1) * gi;
          b[i] = options.beta2 * b[i] + (1.0 - options.beta2) * gi * gi;
          w[i] -= options.learning_rate * (a[i] / c1) / (std::sqrt(b[i] / c2) + options.adam_eps);
        }
      }
    }
    result.log.push_back(evaluate(epoch));
    const double acc = result.log.back().valid_accuracy.value_or(-1.0);
    // Without a valid split the last epoch wins.
    if (valid_enc.empty() || acc > best) {
      best = acc;
      result.model = model;
      result.best_epoch = epoch;
    }
  }
  return result;
}

std::string render_train_log(const std::vector<TrainLogRow>& log) {
  std::string out = "epoch,train_loss,valid_accuracy\n";
  char buf[64];
  for (const auto& row : log) {
    std::snprintf(buf, sizeof buf, "%zu,%.9f,", row.epoch, row.train_loss);
    out += buf;
    if (row.valid_accuracy) {
      std::snprintf(buf, sizeof buf, "%.6f", *row.valid_accuracy);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace retype::model
