// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#include "ner/trainer.hpp"

#include "ner/errors.hpp"

#include <cmath>
#include <fmt/format.h>

namespace ner {

auto format_epoch_line(const EpochRecord& record) -> std::string
{
    return fmt::format("{}\t{}\t{}\t{}",
                       record.epoch,
                       record.train_loss,
                       record.validation_loss,
                       record.learning_rate);
}

template <typename Real>
auto train_model(const Config& config,
                 const Corpus& train,
                 const Corpus& validation,
                 const EmbeddingTable<Real>* pretrained,
                 const LogSink& sink) -> TrainResult<Real>
{
    config.validate();
    if (train.sentences.empty()) {
        throw ValidationError("training corpus has no sentences");
    }
    TrainResult<Real> result;
    const auto emit = [&](const std::string& line) {
        result.log += line;
        result.log += '\n';
        if (sink) {
            sink(line);
        }
    };

    Rng rng { config.seed };
    auto model = NerModel<Real>::create(config, train, pretrained, rng);
    check_label_inventory(model, validation);

    auto params = model.trainable_parameters();
    auto optimizer = NadamState<Real>::for_params(params, config.nadam());

    std::size_t pos = 0;
    const auto text = format_config(config);
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        emit("# " + text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    emit("epoch\ttrain_loss\tvalidation_loss\tlr");

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = lr_schedule(static_cast<long long>(epoch), config.schedule());
        const auto batches
          = make_batches(train, model.words.vocab(), config.batch_size, config.seed + epoch);
        double total = 0.0;
        for (const auto& batch : batches) {
            zero_grad<Real>(params);
            const auto scale_by = Real(1) / static_cast<Real>(batch.token_count());
            for (const auto id : batch.sentence_ids) {
                const auto& sentence = train.sentences[id];
                Tape<Real> tape;
                Tensor<Real> loss;
                try {
                    loss = model.sentence_loss(tape, sentence, true, rng);
                } catch (const NumericError& e) {
                    throw NumericError(fmt::format(
                      "epoch {}: non-finite value in forward pass: {}", epoch + 1, e.what()));
                }
                total += static_cast<double>(loss.item());
                backward(tape, scale(tape, loss, scale_by));
            }
            if (config.clip_norm > 0.0) {
                clip_grad_norm<Real>(params, config.clip_norm);
            }
            try {
                nadam_step<Real>(params, optimizer, lr);
            } catch (const NumericError& e) {
                throw NumericError(
                  fmt::format("epoch {}: non-finite gradient: {}", epoch + 1, e.what()));
            }
        }

        EpochRecord record;
        record.epoch = epoch + 1;
        record.train_loss = total / static_cast<double>(train.token_count());
        record.validation_loss = mean_token_loss(model, validation);
        record.learning_rate = lr;
        if (!std::isfinite(record.train_loss) || !std::isfinite(record.validation_loss)) {
            throw NumericError(fmt::format("epoch {}: loss is not finite", epoch + 1));
        }
        result.epochs.push_back(record);
        emit(format_epoch_line(record));

        if (result.best.epoch < 0 || record.validation_loss < result.best.validation_loss) {
            result.best = { static_cast<std::int64_t>(record.epoch), record.validation_loss };
            result.best_checkpoint = encode_checkpoint(model, &optimizer, result.best);
        }
    }
    if (result.best_checkpoint.empty()) {
        result.best_checkpoint = encode_checkpoint(model, &optimizer, result.best);
    }
    result.final_checkpoint = encode_checkpoint(model, &optimizer, result.best);

    if (!config.checkpoint.empty()) {
        write_file_bytes(config.checkpoint, result.best_checkpoint);
        write_file_bytes(config.checkpoint + ".final", result.final_checkpoint);
    }
    return result;
}

template auto train_model<float>(const Config&,
                                 const Corpus&,
                                 const Corpus&,
                                 const EmbeddingTable<float>*,
                                 const LogSink&) -> TrainResult<float>;
template auto train_model<double>(const Config&,
                                  const Corpus&,
                                  const Corpus&,
                                  const EmbeddingTable<double>*,
                                  const LogSink&) -> TrainResult<double>;

} // namespace ner
