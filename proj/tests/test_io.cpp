#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "nesycl/checkpoint.hpp"
#include "nesycl/errors.hpp"
#include "nesycl/features.hpp"
#include "nesycl/plot.hpp"
#include "nesycl/scenegen.hpp"
#include "nesycl/selftest.hpp"

using namespace nesycl;

namespace {

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("nesycl_test_" + name);
    std::filesystem::remove_all(p);
    return p;
}

int cli(const std::string& args) {
    const std::string cmd = std::string(NESYCL_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Raster sample_raster(int index) {
    StreamConfig c;
    c.num_tasks = 1;
    c.classes_per_task = 2;
    c.train_per_class = 3;
    c.test_per_class = 0;
    c.pretrain_classes = 0;
    const auto s = build_task_stream(c);
    return render(s.tasks[0].train[static_cast<std::size_t>(index)].scene);
}

}  // namespace

TEST_CASE("feature extractor shape and determinism") {
    const FeatureExtractor a(7), b(7), c(8);
    CHECK(a.feature_dim() == 4096);
    CHECK(a.hash() == b.hash());
    CHECK(a.hash() != c.hash());
    const auto r = sample_raster(0);
    const auto f = a.extract(r);
    CHECK(f.size() == 4096);
    CHECK(f == b.extract(r));
    CHECK((f.array() >= 0).all());  // post-ReLU
    CHECK_THROWS_AS(a.extract(Raster(32, 32, kBackground)), ShapeMismatch);
    const std::vector<Raster> batch{r, sample_raster(1)};
    CHECK(a.extract_batch(batch).col(0) == f);
}

TEST_CASE("pretraining moves the extractor and lowers the loss") {
    std::vector<Raster> rasters;
    std::vector<int> labels;
    for (int i = 0; i < 6; ++i) {
        rasters.push_back(sample_raster(i));
        labels.push_back(i / 3);
    }
    FeatureExtractor fx(3);
    const auto before = fx.hash();
    FeatureExtractor::PretrainOptions opt;
    opt.epochs = 4;
    opt.hidden_dim = 8;
    opt.batch_size = 3;
    const auto loss = fx.pretrain(rasters, labels, opt);
    CHECK(loss.size() == 4);
    CHECK(loss.back() < loss.front());
    CHECK(fx.hash() != before);
    CHECK(fx.mode() == FeatureExtractor::Mode::Pretrained);
}

TEST_CASE("checkpoint round trip") {
    const auto dir = scratch("ckpt");
    Mlp<float> net(MlpShape{6, 4, 11, 5});
    Rng rng(2);
    net.reset_trunk(rng);
    net.reset_attr_head(rng);
    net.reset_class_head(rng);
    save_checkpoint(dir / "mlp", to_tensors(net));
    const auto back = mlp_from_tensors(load_checkpoint(dir / "mlp"));
    CHECK(back.shape() == net.shape());
    CHECK(back.params() == net.params());

    const FeatureExtractor fx(9);
    save_checkpoint(dir / "fx", to_tensors(fx));
    const auto fx2 = extractor_from_tensors(load_checkpoint(dir / "fx"));
    CHECK(fx2.hash() == fx.hash());
    CHECK(fx2.mode() == fx.mode());

    std::ifstream in(dir / "mlp" / "manifest.json");
    const auto manifest = nlohmann::json::parse(in);
    CHECK(manifest.dump().find("\"w1\"") != std::string::npos);
    CHECK(std::filesystem::file_size(dir / "mlp" / "tensors.bin") == net.params().size() * sizeof(float));
    CHECK_THROWS(load_checkpoint(dir / "missing"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("svg output is deterministic") {
    const std::vector<Series> s{{"a", {{0, 10}, {1, 20}}}, {"b", {{0, 30}, {1, 5}}}};
    const auto svg = line_chart_svg("t", "x", "y", s);
    CHECK(svg == line_chart_svg("t", "x", "y", s));
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find(">a<") != std::string::npos);
    CHECK_THROWS_AS(learning_curves({}), Error);
}

TEST_CASE("selftest passes") {
    std::ostringstream out;
    CHECK(run_selftest(out) == 0);
}

TEST_CASE("cli exit codes") {
    const auto dir = scratch("cli");
    CHECK(cli("selftest") == 0);
    CHECK(cli("run --method bogus --out-dir " + (dir / "bogus").string()) == 2);
    CHECK(cli("run --tasks 0 --out-dir " + dir.string()) == 2);
    CHECK(cli("--no-such-flag") == 2);
    const std::string gen = "gen --tasks 1 --classes 1 --train 1 --test 1 --out-dir " + (dir / "data").string();
    CHECK(cli(gen) == 0);
    CHECK(std::filesystem::exists(dir / "data" / "stream.json"));
    CHECK(cli(gen) == 2);  // refuses to overwrite
    CHECK(cli(gen + " --force") == 0);
    const std::string run = "run --method symbolic --tasks 2 --classes 2 --train 4 --test 2 --num-seeds 1 --out-dir " +
                            (dir / "runs").string();
    CHECK(cli(run) == 0);
    CHECK(std::filesystem::exists(dir / "runs" / "report.csv"));
    CHECK(cli("report " + (dir / "runs").string() + " --out-dir " + (dir / "rep").string()) == 0);
    CHECK(cli("report " + (dir / "nothing").string() + " --out-dir " + (dir / "rep2").string()) == 1);
    std::filesystem::remove_all(dir);
}
