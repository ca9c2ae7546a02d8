#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "../support/helpers.hpp"
#include "robojudge/util.hpp"

namespace rj = robojudge;

TEST_CASE("sha256 matches known vectors", "[util]") {
  CHECK(rj::sha256_hex(std::string_view("")) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(rj::sha256_hex(std::string_view("abc")) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("base64 round trips and matches RFC vectors", "[util]") {
  CHECK(rj::base64_encode(std::vector<std::uint8_t>{}) == "");
  auto enc = [](const std::string& s) {
    return rj::base64_encode(std::vector<std::uint8_t>(s.begin(), s.end()));
  };
  CHECK(enc("f") == "Zg==");
  CHECK(enc("fo") == "Zm8=");
  CHECK(enc("foo") == "Zm9v");
  CHECK(enc("foobar") == "Zm9vYmFy");

  std::vector<std::uint8_t> bytes;
  for (int i = 0; i < 256; ++i) bytes.push_back(static_cast<std::uint8_t>(i));
  CHECK(rj::base64_decode(rj::base64_encode(bytes)) == bytes);
}

TEST_CASE("file round trip and atomic write", "[util]") {
  testutil::TempDir dir;
  auto path = dir.path / "nested" / "file.txt";
  rj::write_file_atomic(path, "hello\n");
  CHECK(rj::read_file_text(path) == "hello\n");
  rj::write_file_atomic(path, "replaced");
  CHECK(rj::read_file_text(path) == "replaced");
  CHECK_THROWS_AS(rj::read_file_bytes(dir.path / "absent"), rj::ValidationError);
}

TEST_CASE("run_command reports exit codes and captures stdout", "[util]") {
  rj::CommandResult ok = rj::run_command("printf hi");
  CHECK(ok.exit_code == 0);
  CHECK(ok.output == "hi");
  rj::CommandResult bad = rj::run_command("exit 7");
  CHECK(bad.exit_code == 7);
}

TEST_CASE("shell_quote survives hostile arguments", "[util]") {
  std::string quoted = rj::shell_quote("a b'c$`\"");
  rj::CommandResult result = rj::run_command("printf %s " + quoted);
  CHECK(result.exit_code == 0);
  CHECK(result.output == "a b'c$`\"");
}
