#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "orderedae/errors.hpp"
#include "orderedae/experiment.hpp"
#include "orderedae/plot.hpp"
#include "orderedae/serialize.hpp"

using namespace oae;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "orderedae_unit" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

ExperimentConfig quick(ExperimentId e, Method m, const fs::path& out) {
    ExperimentConfig c = ExperimentConfig::defaults(e, m);
    c.out = out;
    c.restarts = 1;
    c.optimizer.max_iter = 60;
    c.jobs = 1;
    return c;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(ORDEREDAE_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Json, MatrixRoundTrip) {
    Matrix m{{1, 2.5, -3}, {0.1, 1e-300, 7}};
    EXPECT_EQ(matrix_from_json(Json::parse(to_json(m).dump())), m);
    EXPECT_THROW(matrix_from_json(Json::parse(R"({"rows":2,"cols":2,"data":[1,2,3]})")), ParseError);
}

TEST(Json, ModelRoundTrip) {
    Rng rng(3);
    Architecture a = Architecture::extraction(3, 3, {4}, {5}, Skip::identity());
    a.decoder[0].use_bias = true;
    AutoencoderModel m = AutoencoderModel::random(a, rng);
    LossConfig l{0.3, 0.1, 0.12, {0.1, 1, 5}};
    Json j = to_json(m, 7, &l);
    AutoencoderModel back = model_from_json(Json::parse(j.dump()));
    EXPECT_TRUE(back == m);
    EXPECT_EQ(back.params(), m.params());
    EXPECT_EQ(j["seed"].get<std::uint64_t>(), 7u);
    EXPECT_EQ(loss_config_from_json(j["loss"]).q, l.q);
}

TEST(Json, OutcomeRoundTrip) {
    Rng rng(4);
    TrainOutcome o;
    o.model = AutoencoderModel::random(Architecture::extraction(2, 2, {5}, {5}), rng);
    o.report = {{1.5, 1e-7}, {0.0, 0.2}, true, {1}, 1};
    o.loss_terms = {3, 1, 1.5, 0.5};
    o.seed = 12;
    o.restarts = 5;
    o.iterations = 321;
    o.converged = true;
    o.explicit_ok = false;
    o.warnings = {"w"};
    TrainOutcome back = train_outcome_from_json(Json::parse(to_json(o, LossConfig{1, 0.5, 0.1, {1, 100}}).dump()));
    EXPECT_TRUE(back.model == o.model);
    EXPECT_EQ(back.report.variances, o.report.variances);
    EXPECT_EQ(back.report.residual_set, o.report.residual_set);
    EXPECT_EQ(back.loss_terms.j2, 1.5);
    EXPECT_EQ(back.seed, 12u);
    EXPECT_EQ(back.iterations, 321);
    EXPECT_EQ(back.explicit_ok, std::optional<bool>(false));
    EXPECT_EQ(back.warnings, o.warnings);
}

TEST(Json, LinearRelationRoundTrip) {
    LinearRelation r{Matrix{{0.8}, {-0.6}}, {0.1, 0.2}, {"a", "b"}};
    LinearRelation back = linear_relation_from_json(Json::parse(to_json(r).dump()));
    EXPECT_EQ(back.residual_components, r.residual_components);
    EXPECT_EQ(back.mean, r.mean);
    EXPECT_EQ(back.names, r.names);
}

TEST(Json, ReadErrors) {
    const fs::path dir = fresh_dir("json");
    std::ofstream(dir / "bad.json") << "{ not json";
    EXPECT_THROW(read_json(dir / "bad.json"), ParseError);
    EXPECT_THROW(read_json(dir / "missing.json"), ParseError);
    std::ofstream(dir / "wrong.json") << R"({"format":"something-else"})";
    EXPECT_THROW(model_from_json(read_json(dir / "wrong.json")), ParseError);
}

TEST(Plot, SvgHasSeriesAndLegend) {
    PlotSpec spec{"variances", "q", "V", true};
    std::string svg = render_svg(spec, {{"V_y1", {1, 2, 3}, {1, 0.5, 0.4}, false},
                                        {"V_y2", {1, 2, 3}, {1e-2, 1e-5, 0}, false},
                                        {"pts", {0, 1}, {1, 2}, true}});
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
    EXPECT_NE(svg.find("<polyline"), std::string::npos);
    EXPECT_NE(svg.find("<circle"), std::string::npos);
    EXPECT_NE(svg.find("V_y2"), std::string::npos);
    EXPECT_NE(svg.find("1e-5"), std::string::npos);
    EXPECT_EQ(svg.find("nan"), std::string::npos);
}

TEST(Plot, CsvTableReadsAndRejectsRagged) {
    const fs::path dir = fresh_dir("table");
    std::ofstream(dir / "t.csv") << "a,b\n1,x\n2,3\n";
    CsvTable t = read_csv_table(dir / "t.csv");
    EXPECT_EQ(t.rows.size(), 2u);
    auto b = t.numbers("b");
    EXPECT_TRUE(std::isnan(b[0]));
    EXPECT_EQ(b[1], 3.0);
    EXPECT_THROW(t.column("c"), DataError);
    std::ofstream(dir / "r.csv") << "a,b\n1\n";
    EXPECT_THROW(read_csv_table(dir / "r.csv"), ParseError);
}

TEST(Config, DefaultsCarryPublishedSettings) {
    ExperimentConfig two = ExperimentConfig::defaults(ExperimentId::TwoVar, Method::Aeo);
    LossConfig l = two.loss_at(10);
    EXPECT_EQ(l.alpha, 1.0);
    EXPECT_EQ(l.beta, 0.5);
    EXPECT_EQ(l.gamma, 0.1);
    EXPECT_EQ(l.q, (Vector{1, 100}));
    EXPECT_EQ(two.n_samples, 100u);

    ExperimentConfig five = ExperimentConfig::defaults(ExperimentId::FiveVar, Method::Raeo21);
    EXPECT_EQ(five.n_samples, 300u);
    EXPECT_EQ(five.noise_var, 0.1);
    LossConfig f = five.loss_at(10);
    EXPECT_EQ(f.alpha, 0.3);
    EXPECT_EQ(f.beta, 0.1);
    EXPECT_EQ(f.gamma, 0.12);
    EXPECT_EQ(f.q, (Vector{0.1, 1, 5, 40, 50}));
    EXPECT_EQ(five.architecture().encoder_skip.kind, Skip::Kind::Identity);
    ExperimentConfig five_aeo = ExperimentConfig::defaults(ExperimentId::FiveVar, Method::Aeo);
    EXPECT_EQ(five_aeo.encoder_hidden, (std::vector<std::size_t>{6}));
    EXPECT_EQ(five_aeo.alpha, 0.2);
    EXPECT_EQ(five_aeo.beta, 0.3);
    EXPECT_EQ(five_aeo.gamma, 0.08);
}

TEST(Config, JsonOverridesAndRejectsUnknownKeys) {
    ExperimentConfig base = ExperimentConfig::defaults(ExperimentId::TwoVar, Method::Aeo);
    ExperimentConfig c = apply_config_json(Json::parse(R"({"q": 4, "seed": 9, "q_sweep": [1, 2], "max_iter": 50})"), base);
    EXPECT_EQ(c.q, 4.0);
    EXPECT_EQ(c.seed, 9u);
    EXPECT_EQ(c.q_sweep, (std::vector<double>{1, 2}));
    EXPECT_EQ(c.optimizer.max_iter, 50);
    EXPECT_THROW(apply_config_json(Json::parse(R"({"qq": 4})"), base), ContractError);
    EXPECT_THROW(apply_config_json(Json::parse(R"({"q": "four"})"), base), ParseError);
    ExperimentConfig round = apply_config_json(to_json(c), base);
    EXPECT_EQ(to_json(round).dump(), to_json(c).dump());
}

TEST(Config, ValidationCatchesInconsistencies) {
    ExperimentConfig c = ExperimentConfig::defaults(ExperimentId::TwoVar, Method::Aeo);
    EXPECT_NO_THROW(c.validate());
    c.q_sweep.clear();
    EXPECT_THROW(c.validate(), ContractError);
    c = ExperimentConfig::defaults(ExperimentId::TwoVar, Method::Aeo);
    c.explicit_relation = true;
    EXPECT_THROW(c.validate(), ContractError);
    c = ExperimentConfig::defaults(ExperimentId::TwoVar, Method::Aeo);
    c.p = 2;
    EXPECT_THROW(c.validate(), ContractError);
    EXPECT_THROW(experiment_from_string("three_var"), ContractError);
    EXPECT_THROW(method_from_string("vae"), ContractError);
    EXPECT_EQ(method_from_string("raeo"), Method::Raeo21);
}

TEST(Commands, GenerateIsDeterministic) {
    const fs::path dir = fresh_dir("gen");
    ExperimentConfig c = quick(ExperimentId::TwoVar, Method::Aeo, dir / "a");
    c.seed = 7;
    cmd_generate(c);
    c.out = dir / "b";
    cmd_generate(c);
    const std::string a = slurp(dir / "a" / "data.csv");
    EXPECT_EQ(a, slurp(dir / "b" / "data.csv"));
    Dataset d = load_csv(dir / "a" / "data.csv");
    EXPECT_EQ(d.num_samples(), 100u);
    EXPECT_EQ(d.num_vars(), 2u);
}

TEST(Commands, FiveVarManifestRecordsNoise) {
    const fs::path dir = fresh_dir("gen5");
    cmd_generate(quick(ExperimentId::FiveVar, Method::Aeo, dir));
    Json m = read_json(dir / "manifest.json");
    EXPECT_EQ(m["noise_var"].get<double>(), 0.1);
    EXPECT_EQ(m["n_samples"].get<std::size_t>(), 300u);
    EXPECT_EQ(load_csv(dir / "data.csv").num_vars(), 5u);
}

TEST(Commands, SingleQSweepWritesOneRow) {
    const fs::path dir = fresh_dir("sweep1");
    ExperimentConfig c = quick(ExperimentId::TwoVar, Method::Raeo21, dir);
    c.q_sweep = {3};
    cmd_sweep(c);
    CsvTable t = read_csv_table(dir / "sweep.csv");
    EXPECT_EQ(t.rows.size(), 1u);
    EXPECT_EQ(t.header, run_report_header(2));
    for (const char* f : {"prediction.csv", "reconstruction.csv", "variances.svg", "loss_terms.svg",
                          "prediction.svg", "reconstruction.svg"})
        EXPECT_TRUE(fs::exists(dir / f)) << f;
}

TEST(Commands, PcaSweepRuns) {
    const fs::path dir = fresh_dir("sweep_pca");
    ExperimentConfig c = quick(ExperimentId::TwoVar, Method::Pca, dir);
    c.q_sweep = {1, 2};
    cmd_sweep(c);
    CsvTable t = read_csv_table(dir / "sweep.csv");
    EXPECT_EQ(t.rows.size(), 2u);
}

TEST(Commands, ExplicitOnPlainFormIsUsageError) {
    ExperimentConfig c = quick(ExperimentId::TwoVar, Method::Aeo, fresh_dir("ex_aeo"));
    c.explicit_relation = true;
    EXPECT_THROW(cmd_extract(c), ContractError);
}

TEST(Commands, TrivialModelNeedsRetryFlag) {
    const fs::path dir = fresh_dir("trivial");
    ExperimentConfig c = quick(ExperimentId::TwoVar, Method::Aeo, dir);
    Rng rng(1);
    TrainOutcome o;
    o.model = AutoencoderModel::random(c.architecture(), rng);
    for (double& w : o.model.layer(1).weights.row(1)) w = 0.0;
    Dataset d = make_dataset(c);
    o.report = variance_report(o.model, d.x, c.eps);
    o.trivial = true;
    write_json(to_json(o, c.loss_at(c.q)), dir / "outcome.json");
    try {
        cmd_extract(c, dir / "outcome.json");
        FAIL();
    } catch (const TrivialSolutionError& e) {
        EXPECT_NE(std::string(e.what()).find("--retry-normalized"), std::string::npos);
    }
    c.retry_normalized = true;
    EXPECT_NO_THROW(cmd_extract(c, dir / "outcome.json"));
    Json rel = read_json(dir / "implicit.json");
    Matrix a_er = matrix_from_json(rel["A_Er"]);
    EXPECT_NEAR(std::sqrt(frobenius_sq(a_er)), 1.0, 1e-9);
}

TEST(Commands, ExtractWritesStandaloneRelation) {
    const fs::path dir = fresh_dir("extract");
    ExperimentConfig c = quick(ExperimentId::TwoVar, Method::Raeo21, dir);
    c.optimizer.max_iter = 400;
    cmd_train(c);
    cmd_extract(c, dir / "outcome.json");
    ImplicitRelation rel = implicit_relation_from_json(read_json(dir / "implicit.json"));
    EXPECT_EQ(rel.kind, RelationKind::Raeo);
    ASSERT_TRUE(rel.norm.has_value());
    CsvTable t = read_csv_table(dir / "implicit_prediction.csv");
    EXPECT_EQ(t.rows.size(), 100u);
}

TEST(Commands, CheckGradPasses) {
    double err = 1;
    cmd_check_grad(quick(ExperimentId::FiveVar, Method::Raeo21, fresh_dir("cg")), &err);
    EXPECT_LE(err, 1e-5);
}

TEST(Commands, CustomCsvExperiment) {
    const fs::path dir = fresh_dir("custom");
    ExperimentConfig g = quick(ExperimentId::TwoVar, Method::Aeo, dir);
    cmd_generate(g);
    ExperimentConfig c = quick(ExperimentId::Custom, Method::Raeo21, dir / "run");
    c.data_path = dir / "data.csv";
    c.q_sweep = {2};
    cmd_sweep(c);
    EXPECT_EQ(read_csv_table(dir / "run" / "sweep.csv").rows.size(), 1u);
}

TEST(Cli, ExitCodes) {
    const fs::path dir = fresh_dir("cli");
    const std::string out = " --out " + dir.string();
    EXPECT_EQ(run_cli("generate --seed 7" + out), 0);
    EXPECT_EQ(run_cli("generate --experiment bogus" + out), 2);
    EXPECT_EQ(run_cli("frobnicate"), 2);
    EXPECT_EQ(run_cli("train --method pca" + out), 2);
    EXPECT_EQ(run_cli("extract --explicit --method aeo" + out), 2);
    EXPECT_EQ(run_cli("train --config " + (dir / "nope.json").string() + out), 3);
    std::ofstream(dir / "bad.csv") << "a,b\n1,2\n3,x\n";
    EXPECT_EQ(run_cli("sweep --experiment custom --data " + (dir / "bad.csv").string() + out), 3);
    std::ofstream(dir / "flat.csv") << "a,b\n1,2\n1,3\n1,4\n";
    EXPECT_EQ(run_cli("sweep --experiment custom --data " + (dir / "flat.csv").string() + out), 3);
}

TEST(Cli, TrivialWithoutRetryExitsNumerical) {
    const fs::path dir = fresh_dir("cli_trivial");
    ExperimentConfig c = quick(ExperimentId::TwoVar, Method::Aeo, dir);
    Rng rng(1);
    TrainOutcome o;
    o.model = AutoencoderModel::random(c.architecture(), rng);
    for (double& w : o.model.layer(1).weights.row(1)) w = 0.0;
    o.report = variance_report(o.model, make_dataset(c).x, c.eps);
    write_json(to_json(o, c.loss_at(c.q)), dir / "outcome.json");
    EXPECT_EQ(run_cli("extract --model " + (dir / "outcome.json").string() + " --out " + dir.string()), 4);
}

TEST(Cli, SeedFromEnvironment) {
    const fs::path dir = fresh_dir("cli_env");
    ASSERT_EQ(run_cli("generate --seed 5 --out " + (dir / "flag").string()), 0);
    ASSERT_EQ(run_cli("generate --out " + (dir / "env").string()), 0);
    ::setenv("ORDEREDAE_SEED", "5", 1);
    ASSERT_EQ(run_cli("generate --out " + (dir / "env5").string()), 0);
    ::unsetenv("ORDEREDAE_SEED");
    EXPECT_EQ(slurp(dir / "flag" / "data.csv"), slurp(dir / "env5" / "data.csv"));
    EXPECT_NE(slurp(dir / "flag" / "data.csv"), slurp(dir / "env" / "data.csv"));
}

TEST(Cli, ExtractTakesSettingsFromModelFile) {
    const fs::path dir = fresh_dir("cli_model");
    ASSERT_EQ(run_cli("train --method raeo21 --restarts 1 --max-iter 200 --out " + (dir / "train").string()), 0);
    EXPECT_EQ(run_cli("extract --explicit --max-iter 200 --model " + (dir / "train" / "outcome.json").string() +
                      " --out " + (dir / "extract").string()),
              0);
    EXPECT_TRUE(fs::exists(dir / "extract" / "explicit_outcome.json"));
}
