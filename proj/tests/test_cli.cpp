#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <string>

#include <sys/wait.h>

#ifndef ROTORDIAG_CLI_PATH
#error "ROTORDIAG_CLI_PATH must point at the rotordiag executable"
#endif

using testutil::TempDir;

namespace {

struct Run {
    int code = -1;
    std::string output;
};

/// Runs the CLI through the shell with stderr folded into stdout.
Run cli(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + (env.empty() ? "" : " ") + "'" ROTORDIAG_CLI_PATH "' " + args + " 2>&1";
    Run r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0)
        r.output.append(buf, n);
    const int status = ::pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

const char* kSmallImage = " --height 16 --width 16";

/// 10+10 images of 16x16 from one-second clips.
void small_dataset(const TempDir& dir, const std::string& preset, const std::string& name) {
    const Run r = cli("--quiet --output-dir " + q(dir.path()) + " synth --preset " + preset +
                      " --per-class 10 --duration 1 --out " + name + kSmallImage);
    REQUIRE_MESSAGE(r.code == 0, r.output);
}

} // namespace

TEST_CASE("help lists every subcommand") {
    const Run r = cli("--help");
    CHECK(r.code == 0);
    for (const char* cmd : {"synth", "wav", "spectrogram", "train", "eval", "transfer", "gradcheck", "experiment"})
        CHECK(r.output.find(cmd) != std::string::npos);
    CHECK(cli("").code == 2);
    CHECK(cli("frobnicate").code == 2);
}

TEST_CASE("wav and spectrogram are deterministic") {
    TempDir dir("cli");
    const std::string base = "--quiet --output-dir " + q(dir.path()) + " ";
    REQUIRE(cli(base + "wav --preset quadB --config config2 --thrust high --duration 2 --out a.wav").code == 0);
    REQUIRE(cli(base + "wav --preset quadB --config config2 --thrust high --duration 2 --out b.wav").code == 0);
    CHECK(testutil::slurp(dir / "a.wav") == testutil::slurp(dir / "b.wav"));
    CHECK(testutil::slurp(dir / "a.wav").size() == 44 + 2u * 2u * 44100u);

    REQUIRE(cli(base + "spectrogram --wav a.wav --out one.ppm").code == 0);
    REQUIRE(cli(base + "spectrogram --wav a.wav --out two.ppm").code == 0);
    const auto img = testutil::slurp(dir / "one.ppm");
    CHECK(img == testutil::slurp(dir / "two.ppm"));
    CHECK(img.size() == std::string("P6\n64 64\n255\n").size() + 64u * 64u * 3u);
}

TEST_CASE("seed comes from the flag or the environment") {
    TempDir dir("cli");
    const std::string base = "--quiet --output-dir " + q(dir.path()) + " ";
    REQUIRE(cli("--seed 5 " + base + "wav --config config3 --duration 0.5 --out flag.wav").code == 0);
    REQUIRE(cli(base + "wav --config config3 --duration 0.5 --out env.wav", "ROTORDIAG_SEED=5").code == 0);
    REQUIRE(cli(base + "wav --config config3 --duration 0.5 --out other.wav", "ROTORDIAG_SEED=6").code == 0);
    CHECK(testutil::slurp(dir / "flag.wav") == testutil::slurp(dir / "env.wav"));
    CHECK(testutil::slurp(dir / "flag.wav") != testutil::slurp(dir / "other.wav"));
    CHECK(cli(base + "wav --duration 0.5", "ROTORDIAG_SEED=banana").code == 2);
}

TEST_CASE("validation failures exit 2 and name the flag") {
    TempDir dir("cli");
    const Run preset = cli("--output-dir " + q(dir.path()) + " synth --preset quadC");
    CHECK(preset.code == 2);
    CHECK(preset.output.find("--preset") != std::string::npos);
    // checked before the (missing) audio is read
    CHECK(cli("--output-dir " + q(dir.path()) + " spectrogram --wav missing.wav --N 0").code == 2);
    CHECK(cli("--output-dir " + q(dir.path()) + " spectrogram --wav missing.wav --hop 0").code == 2);
    CHECK(cli("--output-dir " + q(dir.path()) + " synth --per-class 3").code == 2);
    CHECK(cli("--output-dir " + q(dir.path()) + " wav --duration -1").code == 2);
}

TEST_CASE("I/O failures exit 3") {
    TempDir dir("cli");
    const std::string base = "--quiet --output-dir " + q(dir.path()) + " ";
    CHECK(cli(base + "spectrogram --wav missing.wav").code == 3);
    testutil::spit(dir / "blocker", {0});
    CHECK(cli(base + "synth --per-class 10 --duration 1 --out blocker/sub" + kSmallImage).code == 3);
    testutil::spit(dir / "junk.csv", {'x', '\n'});
    CHECK(cli(base + "train --manifest junk.csv").code == 3);
    testutil::spit(dir / "junk.wav", {'R', 'I', 'F', 'F'});
    CHECK(cli(base + "spectrogram --wav junk.wav").code == 3);
}

TEST_CASE("synth writes the images and manifest under the output directory") {
    TempDir dir("cli");
    small_dataset(dir, "quadA", "qa");
    const auto manifest = testutil::slurp(dir / "qa" / "manifest.csv");
    const std::string text(manifest.begin(), manifest.end());
    CHECK(text.rfind("path,label,quadrotor,config,thrust\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 21);
    CHECK(std::filesystem::exists(dir / "qa" / "broken" / "quadA_broken_009.ppm"));
}

TEST_CASE("train, eval and transfer are reproducible") {
    TempDir dir("cli");
    small_dataset(dir, "quadA", "qa");
    small_dataset(dir, "quadB", "qb");
    const std::string base = "--quiet --seed 3 --output-dir " + q(dir.path()) + " ";
    const std::string train = "train --manifest qa/manifest.csv --train-per-class 5 --val-per-class 2 --epochs 2";
    REQUIRE(cli(base + train + " --checkpoint m1.rdg --report r1").code == 0);
    REQUIRE(cli(base + train + " --checkpoint m2.rdg --report r2").code == 0);
    CHECK(testutil::slurp(dir / "m1.rdg") == testutil::slurp(dir / "m2.rdg"));
    CHECK(testutil::slurp(dir / "r1.txt") == testutil::slurp(dir / "r2.txt"));
    CHECK(testutil::slurp(dir / "r1.csv") == testutil::slurp(dir / "r2.csv"));
    const auto csv = testutil::slurp(dir / "r1.csv");
    CHECK(std::string(csv.begin(), csv.end()).rfind("epoch,train_loss,train_accuracy,validation_loss,validation_accuracy\n", 0) == 0);

    const Run ev = cli("--seed 3 --output-dir " + q(dir.path()) + " eval --manifest qa/manifest.csv --checkpoint m1.rdg");
    CHECK(ev.code == 0);
    CHECK(ev.output.find("accuracy: ") != std::string::npos);
    CHECK(ev.output.find("(") != std::string::npos);
    CHECK(ev.output.find("%") != std::string::npos);
    CHECK(cli(base + "eval --manifest qa/manifest.csv --checkpoint nope.rdg").code == 3);

    const std::string transfer = "transfer --checkpoint m1.rdg --manifest qb/manifest.csv --train-per-class 3 "
                                 "--val-per-class 2 --epochs 2";
    REQUIRE(cli(base + transfer + " --out t1.rdg --report x1").code == 0);
    REQUIRE(cli(base + transfer + " --out t2.rdg --report x2").code == 0);
    CHECK(testutil::slurp(dir / "t1.rdg") == testutil::slurp(dir / "t2.rdg"));
    CHECK(testutil::slurp(dir / "x1.txt") == testutil::slurp(dir / "x2.txt"));
    CHECK(cli(base + "transfer --checkpoint m1.rdg --manifest qb/manifest.csv --train-per-class 9").code == 2);
}

TEST_CASE("divergence exits 4") {
    TempDir dir("cli");
    small_dataset(dir, "quadA", "qa");
    const Run r = cli("--quiet --output-dir " + q(dir.path()) +
                      " train --manifest qa/manifest.csv --train-per-class 5 --val-per-class 2 --epochs 3 --lr 1e30");
    CHECK(r.code == 4);
}

TEST_CASE("gradcheck passes on a small default model") {
    const Run r = cli("--seed 1 gradcheck --height 16 --width 16 --samples 64");
    CHECK(r.code == 0);
    CHECK(r.output.find("max relative error") != std::string::npos);
}
