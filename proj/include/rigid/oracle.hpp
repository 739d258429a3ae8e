#pragma once

#include <cstdint>
#include <cstdio>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <sys/types.h>

#include "rigid/graph.hpp"

namespace rigid {

// Line protocol spoken with an external invariant oracle over its stdio:
//
//   request:  <INVARIANT> <n> <integer-code>\n   INVARIANT in {PLANE, SPHERE, MBEZOUT}
//   reply:    OK <count>\n  |  ERR <message>\n
//
// The integer code is the canonical form's code, so a table keyed by any
// representative can answer for every relabeling.

enum class OracleInvariant { Plane, Sphere, MBezout };

std::string protocol_name(OracleInvariant inv);
std::optional<OracleInvariant> parse_invariant(const std::string& text);

/// The oracle process died or the pipe broke.
class OracleTransportError : public OracleError {
 public:
  using OracleError::OracleError;
};

/// The oracle replied with something other than `OK <count>` or `ERR <msg>`.
class OracleProtocolError : public OracleError {
 public:
  using OracleError::OracleError;
};

/// The oracle answered `ERR <message>`.
class OracleReplyError : public DomainError {
 public:
  explicit OracleReplyError(const std::string& message)
      : DomainError("oracle error: " + message), message_(message) {}
  const std::string& message() const { return message_; }

 private:
  std::string message_;
};

std::string format_request(OracleInvariant inv, const Graph& g);

/// Parses one reply line (without the newline).
std::uint64_t parse_reply(const std::string& line);

/// Child process launched through /bin/sh -c. One request is in flight at a
/// time; the lock serializes callers.
class OracleClient {
 public:
  explicit OracleClient(const std::string& command);
  ~OracleClient();
  OracleClient(const OracleClient&) = delete;
  OracleClient& operator=(const OracleClient&) = delete;

  std::uint64_t query(OracleInvariant inv, const Graph& g);
  std::uint64_t requests() const { return requests_; }

 private:
  std::string command_;
  pid_t pid_ = -1;
  std::FILE* to_child_ = nullptr;
  std::FILE* from_child_ = nullptr;
  std::uint64_t requests_ = 0;
  std::mutex mutex_;
};

/// Several oracle processes; batches are dealt round-robin so that each
/// process sees a deterministic request order.
class OraclePool {
 public:
  OraclePool(const std::string& command, int processes);

  std::uint64_t query(OracleInvariant inv, const Graph& g);
  std::vector<std::uint64_t> query_batch(OracleInvariant inv, const std::vector<Graph>& graphs);

  int size() const { return static_cast<int>(clients_.size()); }
  std::uint64_t requests() const;

 private:
  std::vector<std::unique_ptr<OracleClient>> clients_;
  std::mutex next_mutex_;
  std::size_t next_ = 0;
};

/// Answers for the bundled stub oracle, read from a whitespace-separated
/// table with one `n code invariant value` record per line (`#` comments).
/// Keys are canonicalized, so any labeling of a graph finds its entry.
class OracleTable {
 public:
  static OracleTable load(const std::string& path);
  static OracleTable parse(std::istream& in, const std::string& origin = "<table>");

  void add(OracleInvariant inv, const Graph& g, std::uint64_t value);
  std::optional<std::uint64_t> lookup(OracleInvariant inv, const Graph& g) const;

  struct Entry {
    int n;
    BigInt code;
    OracleInvariant invariant;
    std::uint64_t value;
  };
  /// Entries in file order.
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::map<std::pair<OracleInvariant, std::vector<std::uint64_t>>, std::uint64_t> values_;
  std::vector<Entry> entries_;
};

/// Serves the protocol from `table` until `in` ends. Every request line and
/// its reply are appended to `transcript` when given.
void serve_oracle(const OracleTable& table, std::istream& in, std::ostream& out,
                  std::ostream* transcript = nullptr);

/// Shell command that runs the bundled table-backed stub oracle.
std::string stub_oracle_command(const std::string& stub_binary, const std::string& table,
                                const std::string& transcript = "");

}  // namespace rigid
