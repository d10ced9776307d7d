#include "orderedae/serialize.hpp"

#include <fstream>
#include <sstream>

#include "orderedae/errors.hpp"

namespace oae {

Json to_json(const Matrix& m) {
    return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data().begin(), m.data().end())}};
}

Matrix matrix_from_json(const Json& j) {
    const auto rows = j.at("rows").get<std::size_t>(), cols = j.at("cols").get<std::size_t>();
    auto data = j.at("data").get<std::vector<double>>();
    if (data.size() != rows * cols)
        throw ParseError("matrix: data length " + std::to_string(data.size()) + " does not match " +
                             std::to_string(rows) + "x" + std::to_string(cols),
                         0);
    return Matrix(rows, cols, std::move(data));
}

Json to_json(const NormStats& s) { return Json{{"means", s.means}, {"scales", s.scales}}; }

NormStats norm_stats_from_json(const Json& j) {
    NormStats s{j.at("means").get<Vector>(), j.at("scales").get<Vector>()};
    if (s.means.size() != s.scales.size()) throw ParseError("normalization stats: length mismatch", 0);
    for (double v : s.scales)
        if (!(v > 0)) throw ParseError("normalization stats: scales must be positive", 0);
    return s;
}

Json to_json(const LossConfig& c) {
    return Json{{"alpha", c.alpha}, {"beta", c.beta}, {"gamma", c.gamma}, {"q", c.q}};
}

LossConfig loss_config_from_json(const Json& j) {
    LossConfig c;
    c.alpha = j.at("alpha").get<double>();
    c.beta = j.at("beta").get<double>();
    c.gamma = j.at("gamma").get<double>();
    c.q = j.at("q").get<Vector>();
    return c;
}

namespace {

Json skip_to_json(const Skip& s) {
    Json j{{"kind", std::string(to_string(s.kind))}};
    if (s.kind == Skip::Kind::Fixed) j["matrix"] = to_json(s.matrix);
    return j;
}

Skip skip_from_json(const Json& j) {
    Skip s;
    s.kind = skip_kind_from_string(j.at("kind").get<std::string>());
    if (s.kind == Skip::Kind::Fixed) s.matrix = matrix_from_json(j.at("matrix"));
    return s;
}

Json layers_to_json(std::span<const LayerSpec> specs) {
    Json arr = Json::array();
    for (const auto& l : specs) {
        arr.push_back({{"width", l.width}, {"activation", std::string(to_string(l.activation))}, {"bias", l.use_bias}});
    }
    return arr;
}

std::vector<LayerSpec> layers_from_json(const Json& arr) {
    std::vector<LayerSpec> out;
    for (const auto& l : arr) {
        out.push_back({l.at("width").get<std::size_t>(), activation_from_string(l.at("activation").get<std::string>()),
                       l.at("bias").get<bool>()});
    }
    return out;
}

Json layer_list_to_json(std::span<const Layer> layers) {
    Json arr = Json::array();
    for (const auto& l : layers) {
        Json e{{"activation", std::string(to_string(l.activation))}, {"weights", to_json(l.weights)}};
        if (l.has_bias()) e["bias"] = l.bias;
        arr.push_back(std::move(e));
    }
    return arr;
}

std::vector<Layer> layer_list_from_json(const Json& arr) {
    std::vector<Layer> out;
    for (const auto& e : arr) {
        Layer l;
        l.activation = activation_from_string(e.at("activation").get<std::string>());
        l.weights = matrix_from_json(e.at("weights"));
        if (e.contains("bias")) l.bias = e.at("bias").get<Vector>();
        out.push_back(std::move(l));
    }
    return out;
}

template <typename Fn>
auto wrap_parse(const char* what, Fn&& fn) {
    try {
        return fn();
    } catch (const Json::exception& e) {
        throw ParseError(std::string(what) + ": " + e.what(), 0);
    } catch (const ContractError& e) {
        throw ParseError(std::string(what) + ": " + e.what(), 0);
    }
}

}  // namespace

Json to_json(const Architecture& a) {
    return Json{{"n", a.n},
                {"m", a.m()},
                {"encoder", layers_to_json(a.encoder)},
                {"decoder", layers_to_json(a.decoder)},
                {"encoder_skip", skip_to_json(a.encoder_skip)},
                {"decoder_skip", skip_to_json(a.decoder_skip)}};
}

Architecture architecture_from_json(const Json& j) {
    return wrap_parse("architecture", [&] {
        Architecture a;
        a.n = j.at("n").get<std::size_t>();
        a.encoder = layers_from_json(j.at("encoder"));
        a.decoder = layers_from_json(j.at("decoder"));
        a.encoder_skip = skip_from_json(j.at("encoder_skip"));
        a.decoder_skip = skip_from_json(j.at("decoder_skip"));
        a.validate();
        return a;
    });
}

Json to_json(const AutoencoderModel& mdl, std::optional<std::uint64_t> seed, const LossConfig* loss) {
    Json j{{"format", "orderedae-model/1"}, {"architecture", to_json(mdl.architecture())}};
    j["layers"] = layer_list_to_json(mdl.layers());
    if (seed) j["seed"] = *seed;
    if (loss) j["loss"] = to_json(*loss);
    return j;
}

AutoencoderModel model_from_json(const Json& j) {
    return wrap_parse("model", [&] {
        AutoencoderModel mdl(architecture_from_json(j.at("architecture")));
        const std::vector<Layer> layers = layer_list_from_json(j.at("layers"));
        if (layers.size() != mdl.layers().size()) throw ContractError("layer count does not match architecture");
        for (std::size_t i = 0; i < layers.size(); ++i) {
            Layer& dst = mdl.layer(i);
            if (layers[i].weights.rows() != dst.weights.rows() || layers[i].weights.cols() != dst.weights.cols() ||
                layers[i].bias.size() != dst.bias.size() || layers[i].activation != dst.activation) {
                throw ContractError("layer " + std::to_string(i) + " does not match architecture");
            }
            dst = layers[i];
        }
        return mdl;
    });
}

Json to_json(const LatentReport& r) {
    return Json{{"variances", r.variances}, {"means", r.means},   {"ordered", r.ordered},
                {"residual_set", r.residual_set}, {"p", r.p}};
}

LatentReport latent_report_from_json(const Json& j) {
    return wrap_parse("report", [&] {
        LatentReport r;
        r.variances = j.at("variances").get<Vector>();
        r.means = j.at("means").get<Vector>();
        r.ordered = j.at("ordered").get<bool>();
        r.residual_set = j.at("residual_set").get<std::vector<std::size_t>>();
        r.p = j.at("p").get<std::size_t>();
        return r;
    });
}

Json to_json(const TrainOutcome& o, const LossConfig& loss) {
    Json j{{"format", "orderedae-outcome/1"},
           {"model", to_json(o.model, o.seed, &loss)},
           {"report", to_json(o.report)},
           {"loss_terms", {{"J", o.loss_terms.j}, {"J1", o.loss_terms.j1}, {"J2", o.loss_terms.j2}, {"J3", o.loss_terms.j3}}},
           {"trivial", o.trivial},
           {"converged", o.converged},
           {"seed", o.seed},
           {"restarts", o.restarts},
           {"iterations", o.iterations},
           {"warnings", o.warnings}};
    if (o.explicit_ok) j["explicit_ok"] = *o.explicit_ok;
    return j;
}

TrainOutcome train_outcome_from_json(const Json& j) {
    return wrap_parse("outcome", [&] {
        TrainOutcome o;
        o.model = model_from_json(j.at("model"));
        o.report = latent_report_from_json(j.at("report"));
        const Json& lt = j.at("loss_terms");
        o.loss_terms = {lt.at("J").get<double>(), lt.at("J1").get<double>(), lt.at("J2").get<double>(),
                        lt.at("J3").get<double>()};
        o.trivial = j.at("trivial").get<bool>();
        o.converged = j.value("converged", false);
        o.seed = j.value("seed", std::uint64_t{0});
        o.restarts = j.value("restarts", 0);
        o.iterations = j.value("iterations", 0);
        if (j.contains("explicit_ok")) o.explicit_ok = j.at("explicit_ok").get<bool>();
        o.warnings = j.value("warnings", std::vector<std::string>{});
        return o;
    });
}

Json to_json(const ImplicitRelation& r) {
    Json j{{"format", "orderedae-implicit/1"},
           {"kind", std::string(to_string(r.kind))},
           {"n", r.n},
           {"p", r.p},
           {"hidden", layer_list_to_json(r.hidden)},
           {"A_Er", to_json(r.a_er)},
           {"skip_r", to_json(r.skip_r)},
           {"ybar_r", r.ybar_r},
           {"names", r.names}};
    if (r.norm) j["normalization"] = to_json(*r.norm);
    return j;
}

ImplicitRelation implicit_relation_from_json(const Json& j) {
    return wrap_parse("implicit relation", [&] {
        ImplicitRelation r;
        r.kind = relation_kind_from_string(j.at("kind").get<std::string>());
        r.n = j.at("n").get<std::size_t>();
        r.p = j.at("p").get<std::size_t>();
        r.hidden = layer_list_from_json(j.at("hidden"));
        r.a_er = matrix_from_json(j.at("A_Er"));
        r.skip_r = matrix_from_json(j.at("skip_r"));
        r.ybar_r = j.at("ybar_r").get<Vector>();
        r.names = j.value("names", std::vector<std::string>{});
        if (j.contains("normalization")) r.norm = norm_stats_from_json(j.at("normalization"));
        if (r.p >= r.n || r.a_er.rows() != r.n - r.p || r.ybar_r.size() != r.n - r.p || r.skip_r.cols() != r.n) {
            throw ContractError("inconsistent dimensions");
        }
        return r;
    });
}

Json to_json(const ExplicitRelation& r) {
    Json j{{"format", "orderedae-explicit/1"},
           {"n", r.n},
           {"p", r.p},
           {"hidden", layer_list_to_json(r.hidden)},
           {"A_Er", to_json(r.a_er)},
           {"ybar_r", r.ybar_r},
           {"names", r.names}};
    if (r.norm) j["normalization"] = to_json(*r.norm);
    return j;
}

ExplicitRelation explicit_relation_from_json(const Json& j) {
    return wrap_parse("explicit relation", [&] {
        ExplicitRelation r;
        r.n = j.at("n").get<std::size_t>();
        r.p = j.at("p").get<std::size_t>();
        r.hidden = layer_list_from_json(j.at("hidden"));
        r.a_er = matrix_from_json(j.at("A_Er"));
        r.ybar_r = j.at("ybar_r").get<Vector>();
        r.names = j.value("names", std::vector<std::string>{});
        if (j.contains("normalization")) r.norm = norm_stats_from_json(j.at("normalization"));
        if (r.p >= r.n || r.a_er.rows() != r.n - r.p || r.ybar_r.size() != r.n - r.p) {
            throw ContractError("inconsistent dimensions");
        }
        return r;
    });
}

Json to_json(const LinearRelation& r) {
    return Json{{"format", "orderedae-linear/1"},
                {"P_r", to_json(r.residual_components)},
                {"mean", r.mean},
                {"names", r.names}};
}

LinearRelation linear_relation_from_json(const Json& j) {
    return wrap_parse("linear relation", [&] {
        LinearRelation r;
        r.residual_components = matrix_from_json(j.at("P_r"));
        r.mean = j.at("mean").get<Vector>();
        r.names = j.value("names", std::vector<std::string>{});
        return r;
    });
}

void write_json(const Json& j, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    out << j.dump(2) << '\n';
    if (!out) throw DataError("write to '" + path.string() + "' failed");
}

Json read_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path.string() + "'", 0);
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ParseError("'" + path.string() + "': " + e.what(), 0);
    }
}

}  // namespace oae
