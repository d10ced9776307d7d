#pragma once

#include <filesystem>
#include <optional>

#include <json.hpp>

#include "orderedae/autoencoder.hpp"
#include "orderedae/dataset.hpp"
#include "orderedae/extraction.hpp"
#include "orderedae/pca.hpp"
#include "orderedae/training.hpp"

namespace oae {

using Json = nlohmann::ordered_json;

Json to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);

Json to_json(const NormStats& s);
NormStats norm_stats_from_json(const Json& j);

Json to_json(const LossConfig& c);
LossConfig loss_config_from_json(const Json& j);

Json to_json(const Architecture& a);
Architecture architecture_from_json(const Json& j);

/// Architecture, weights (row-major), and optionally the seed and loss used.
Json to_json(const AutoencoderModel& mdl, std::optional<std::uint64_t> seed = std::nullopt,
             const LossConfig* loss = nullptr);
AutoencoderModel model_from_json(const Json& j);

Json to_json(const LatentReport& r);
LatentReport latent_report_from_json(const Json& j);

/// {"model": …, "report": …, "loss_terms": …, flags}
Json to_json(const TrainOutcome& o, const LossConfig& loss);
TrainOutcome train_outcome_from_json(const Json& j);

Json to_json(const ImplicitRelation& r);
ImplicitRelation implicit_relation_from_json(const Json& j);

Json to_json(const ExplicitRelation& r);
ExplicitRelation explicit_relation_from_json(const Json& j);

Json to_json(const LinearRelation& r);
LinearRelation linear_relation_from_json(const Json& j);

void write_json(const Json& j, const std::filesystem::path& path);
/// Throws ParseError on unreadable or malformed files.
Json read_json(const std::filesystem::path& path);

}  // namespace oae
