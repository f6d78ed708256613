#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;

const fs::path kScratch = fs::temp_directory_path() / "tfqds_cli_test";

int run(const std::string& args) {
    fs::create_directories(kScratch);
    const std::string cmd = std::string(TFQDS_CLI) + " " + args + " >" + (kScratch / "stdout").string() + " 2>" +
                            (kScratch / "stderr").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string data(const std::string& rel) { return std::string(TFQDS_DATA_DIR) + "/" + rel; }

}  // namespace

TEST_CASE("reproduce both published distances") {
    CHECK(run("reproduce --fixture table2_302km") == 0);
    CHECK(slurp(kScratch / "stdout").find("FAIL") == std::string::npos);
    CHECK(run("reproduce --fixture " + data("fixtures/table2_504km.json")) == 0);
    CHECK(slurp(kScratch / "stdout").find("NOTE") != std::string::npos);
}

TEST_CASE("estimate") {
    const fs::path out = kScratch / "estimate.json";
    CHECK(run("estimate --fixture table2_302km --scheme multi --out " + out.string()) == 0);
    CHECK(slurp(out).find("\"L\"") != std::string::npos);
    CHECK(run("estimate --fixture " + data("fixtures/empty_counts.json")) == 1);
    CHECK(slurp(kScratch / "stderr").find("zero statistics") != std::string::npos);
    CHECK(run("estimate --fixture no_such_fixture") == 1);
}

TEST_CASE("curves") {
    const fs::path out = kScratch / "curves.csv";
    REQUIRE(run("curves --device table1 --max-km 400 --step-km 100 --out " + out.string()) == 0);
    std::istringstream in(slurp(out));
    std::string line;
    std::getline(in, line);
    CHECK(line == "distance_km,rate_single_bps,rate_multi_tps");
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::stringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) row.push_back(std::stod(cell));
        REQUIRE(row.size() == 3);
        rows.push_back(row);
    }
    REQUIRE(rows.size() == 5);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i][1] <= rows[i - 1][1]);
        CHECK(rows[i][2] <= rows[i - 1][2]);
    }
    CHECK(run("curves --device table1 --max-km -5") == 1);
}

TEST_CASE("demo") {
    const fs::path a = kScratch / "demo_a.jsonl", b = kScratch / "demo_b.jsonl";
    const std::string scenario = data("scenarios/desk_multi.json");
    CHECK(run("demo --config " + scenario + " --out " + a.string()) == 0);
    CHECK(slurp(kScratch / "stderr").find("Charlie") != std::string::npos);
    CHECK(run("demo --config " + scenario + " --out " + b.string()) == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK(!slurp(a).empty());
    CHECK(run("demo --scheme multi --attack bogus") == 1);
    CHECK(run("demo --config " + scenario + " --set scenario.desk_scale_N=100000") == 2);
}

TEST_CASE("optimize and simulate") {
    CHECK(run("optimize --scheme multi --set link.fiber_length_km=100") == 0);
    CHECK(slurp(kScratch / "stdout").find("signal_intensity") != std::string::npos);
    CHECK(run("simulate --seed 3 --set source.total_pulses=1000000") == 0);
    CHECK(slurp(kScratch / "stdout").find("n_Z") != std::string::npos);
    CHECK(run("simulate --set device.misalignment=0.7") == 1);
}
