#include <doctest.h>

#include <fstream>
#include <sstream>

#include "rigid/oracle.hpp"
#include "support.hpp"

using namespace rigid;

namespace {

std::string stub() { return test::binary_dir() + "/rigid-stub-oracle"; }
std::string table() { return test::source_dir() + "/data/stub_table.txt"; }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_SUITE("oracle") {
  TEST_CASE("request and reply lines") {
    CHECK(format_request(OracleInvariant::Plane, Graph::complete(3)) == "PLANE 3 7\n");
    CHECK(protocol_name(OracleInvariant::MBezout) == "MBEZOUT");
    CHECK(parse_invariant("sphere") == OracleInvariant::Sphere);
    CHECK_FALSE(parse_invariant("volume").has_value());
    CHECK(parse_reply("OK 42") == 42);
    CHECK(parse_reply("OK 18446744073709551615") == 18446744073709551615ULL);
    CHECK_THROWS_AS(parse_reply("ERR unknown"), OracleReplyError);
    CHECK_THROWS_AS(parse_reply("OK"), OracleProtocolError);
    CHECK_THROWS_AS(parse_reply("OK -1"), OracleProtocolError);
    CHECK_THROWS_AS(parse_reply("YES 1"), OracleProtocolError);
    CHECK_THROWS_AS(parse_reply("OK 1 2"), OracleProtocolError);
  }

  TEST_CASE("requests carry the canonical code") {
    Graph path(3);
    path.add_edge(1, 0);
    path.add_edge(0, 2);
    Graph other(3);
    other.add_edge(0, 1);
    other.add_edge(1, 2);
    CHECK(format_request(OracleInvariant::Sphere, path) ==
          format_request(OracleInvariant::Sphere, other));
  }

  TEST_CASE("table parsing") {
    std::istringstream in("# header\n3 7 plane 2   # triangle\n\n4 62 SPHERE 4\n");
    const OracleTable t = OracleTable::parse(in);
    CHECK(t.entries().size() == 2);
    CHECK(t.lookup(OracleInvariant::Plane, Graph::complete(3)) == 2u);
    CHECK_FALSE(t.lookup(OracleInvariant::Sphere, Graph::complete(3)).has_value());
    std::istringstream bad("3 7 plane\n");
    CHECK_THROWS_AS(OracleTable::parse(bad), UsageError);
    std::istringstream unknown("3 7 volume 1\n");
    CHECK_THROWS_AS(OracleTable::parse(unknown), UsageError);
    CHECK_THROWS_AS(OracleTable::load("/nonexistent/table"), UsageError);
  }

  TEST_CASE("in-process server") {
    std::istringstream in(
        "PLANE 3 7\nSPHERE 3 7\nPLANE 4 63\nVOLUME 3 7\nplane 3 7\nPLANE x\nPLANE 3\n");
    std::ostringstream out;
    std::ostringstream transcript;
    serve_oracle(OracleTable::load(table()), in, out, &transcript);
    CHECK(out.str() ==
          "OK 2\nOK 2\nERR unknown\nERR unsupported invariant VOLUME\n"
          "ERR unsupported invariant plane\nERR malformed request\nERR malformed request\n");
    CHECK(transcript.str().find("PLANE 3 7\nOK 2\n") == 0);
  }

  TEST_CASE("bundled table") {
    const OracleTable t = OracleTable::load(table());
    CHECK(t.lookup(OracleInvariant::Plane, Graph::complete(3)) == 2u);
    // Every stored graph is minimally rigid and every pair satisfies
    // plane <= sphere <= mbezout.
    for (const auto& e : t.entries()) {
      const Graph g = decode_int(e.code, e.n);
      CHECK(g.size() == 2 * e.n - 3);
      const auto plane = t.lookup(OracleInvariant::Plane, g);
      const auto sphere = t.lookup(OracleInvariant::Sphere, g);
      const auto bound = t.lookup(OracleInvariant::MBezout, g);
      if (plane && sphere) CHECK(*plane <= *sphere);
      if (sphere && bound) CHECK(*sphere <= *bound);
    }
  }

  TEST_CASE("client against the stub process") {
    OracleClient client(stub_oracle_command(stub(), table()));
    CHECK(client.query(OracleInvariant::Plane, Graph::complete(3)) == 2);
    CHECK(client.query(OracleInvariant::Sphere, decode_int(1009, 5)) == 8);
    CHECK_THROWS_AS(client.query(OracleInvariant::Plane, decode_int(63, 4)), OracleReplyError);
    // The session survives an ERR reply.
    CHECK(client.query(OracleInvariant::MBezout, Graph::complete(3)) == 2);
    CHECK(client.requests() == 4);
  }

  TEST_CASE("transcripts are byte-identical across runs") {
    const auto dir = test::temp_dir("transcript");
    std::vector<Graph> graphs = {Graph::complete(3), decode_int(62, 4), decode_int(31501, 6),
                                 decode_int(28894, 6), decode_int(63, 4)};
    std::vector<std::string> texts;
    for (int run = 0; run < 2; ++run) {
      const auto path = dir / ("t" + std::to_string(run) + ".txt");
      {
        OracleClient client(stub_oracle_command(stub(), table(), path.string()));
        for (const auto& g : graphs) {
          for (auto inv : {OracleInvariant::Plane, OracleInvariant::Sphere}) {
            try {
              client.query(inv, g);
            } catch (const OracleReplyError&) {
            }
          }
        }
      }
      texts.push_back(slurp(path));
    }
    CHECK(!texts[0].empty());
    CHECK(texts[0] == texts[1]);
    CHECK(texts[0].find("PLANE 4 63\nERR unknown\n") != std::string::npos);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("transport and protocol failures") {
    OracleClient dead("exit 0");
    CHECK_THROWS_AS(dead.query(OracleInvariant::Plane, Graph::complete(3)), OracleTransportError);
    OracleClient chatty("while read line; do echo hello; done");
    CHECK_THROWS_AS(chatty.query(OracleInvariant::Plane, Graph::complete(3)),
                    OracleProtocolError);
    OracleClient midway("read line; echo 'OK 5'; exit 0");
    CHECK(midway.query(OracleInvariant::Plane, Graph::complete(3)) == 5);
    CHECK_THROWS_AS(midway.query(OracleInvariant::Plane, Graph::complete(3)), OracleTransportError);
  }

  TEST_CASE("pool deals requests round-robin") {
    OraclePool pool(stub_oracle_command(stub(), table()), 3);
    CHECK(pool.size() == 3);
    std::vector<Graph> graphs(7, Graph::complete(3));
    const auto values = pool.query_batch(OracleInvariant::Sphere, graphs);
    CHECK(values == std::vector<std::uint64_t>(7, 2));
    CHECK(pool.requests() == 7);
  }
}
