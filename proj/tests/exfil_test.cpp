#include <doctest.h>

#include "sbcsim/exfil/exfil.hpp"
#include "sbcsim/net/rng.hpp"

using namespace sbcsim;
using namespace sbcsim::exfil;

namespace {

ExfilFile file(const std::string& name, std::size_t n, std::uint8_t fill = 0x5a) { return {name, Bytes(n, fill)}; }

SimTime s(std::uint64_t v) { return SimTime::from_seconds(v); }

}  // namespace

TEST_CASE("email split count is the ceiling of size over cap") {
    Rng rng(8);
    for (int i = 0; i < 500; ++i) {
        const std::size_t cap = rng.uniform(1, 300);
        const std::size_t size = rng.uniform(0, 3000);
        EmailChannel ch("x@example.invalid", cap);
        ExfilFile f{"f", Bytes(size)};
        for (auto& b : f.bytes) b = static_cast<std::uint8_t>(rng.next());
        const auto parts = ch.split(f);
        // Oracle: count chunks by walking the file.
        std::size_t want = 0;
        for (std::size_t off = 0; off < size; off += cap) ++want;
        if (size == 0) want = 1;
        REQUIRE(parts.size() == want);
        Bytes joined;
        for (std::size_t k = 0; k < parts.size(); ++k) {
            REQUIRE(parts[k].index == k + 1);
            REQUIRE(parts[k].count == want);
            REQUIRE(parts[k].body.size() <= cap);
            joined.insert(joined.end(), parts[k].body.begin(), parts[k].body.end());
        }
        REQUIRE(joined == f.bytes);
        REQUIRE(ch.deliver(f) == Outcome::Delivered);
        REQUIRE(ch.reassemble("f") == f.bytes);
    }
}

TEST_CASE("email messages carry their headers") {
    EmailMessage m{"capture-0001", 2, 3, to_bytes("body")};
    CHECK(to_string(m.render("drop@example.invalid")) ==
          "To: drop@example.invalid\r\nX-Exfil-File: capture-0001\r\nX-Exfil-Chunk: 2/3\r\nContent-Length: 4\r\n\r\nbody");
}

TEST_CASE("cloud uploads rename collisions and refuse bad tokens") {
    CloudChannel ch("good", "good");
    CHECK(ch.upload("good", file("a", 3)) == Outcome::Delivered);
    CHECK(ch.upload("good", file("a", 4)) == Outcome::Delivered);
    CHECK(ch.upload("good", file("a", 5)) == Outcome::Delivered);
    CHECK(ch.upload_order() == std::vector<std::string>{"a", "a-dup1", "a-dup2"});
    CHECK(ch.store().at("a-dup1").size() == 4);
    CHECK(ch.upload("bad", file("b", 1)) == Outcome::AuthFailure);
    CHECK(ch.store().size() == 3);
    ch.available = false;
    CHECK(ch.upload("good", file("c", 1)) == Outcome::RetryableFailure);
    CHECK(ch.store().size() == 3);
}

TEST_CASE("scheduler delivers in order and holds the queue during an outage") {
    SchedulerConfig cfg;
    cfg.outages = {Outage{s(100), s(200)}};
    ExfilScheduler sched(cfg, std::make_unique<EmailChannel>("x@example.invalid"));
    std::vector<std::string> got;
    for (std::uint64_t k = 1; k <= 6; ++k) {
        sched.enqueue(file("f" + std::to_string(k), 10));
        for (auto& f : sched.tick(s(60 * k))) got.push_back(f.name);
    }
    // Ticks at 120 and 180 fall inside [100, 200); 240 drains the backlog.
    CHECK(got == std::vector<std::string>{"f1", "f2", "f3", "f4", "f5", "f6"});
    CHECK(sched.log().size() == 6);
    CHECK(sched.log()[1].time == s(240));
    CHECK(sched.log()[1].result.attempts == 3);
}

TEST_CASE("outage windows are half-open") {
    SchedulerConfig cfg;
    cfg.outages = {Outage{s(60), s(120)}};
    ExfilScheduler sched(cfg, std::make_unique<EmailChannel>("x@example.invalid"));
    sched.enqueue(file("a", 1));
    CHECK(sched.tick(s(60)).empty());
    CHECK(sched.next_retry() == s(120));
    CHECK(sched.tick(s(120)).size() == 1);
}

TEST_CASE("retries stop after max_attempts and auth failures drop the file") {
    SchedulerConfig cfg;
    cfg.retry.max_attempts = 2;
    cfg.retry.backoff = s(10);
    cfg.outages = {Outage{s(0), s(1000)}};
    ExfilScheduler sched(cfg, std::make_unique<EmailChannel>("x@example.invalid"));
    sched.enqueue(file("a", 1));
    sched.enqueue(file("b", 1));
    CHECK(sched.tick(s(5)).empty());
    CHECK(sched.next_retry() == s(15));
    CHECK(sched.tick(s(10)).empty());  // not yet eligible
    CHECK(sched.tick(s(15)).empty());  // second attempt fails: "a" dropped, "b" tried once
    REQUIRE(sched.log().size() == 1);
    CHECK(sched.log()[0].name == "a");
    CHECK(sched.log()[0].result.outcome == Outcome::RetryableFailure);
    CHECK(sched.pending() == 1);

    ExfilScheduler auth(SchedulerConfig{}, std::make_unique<CloudChannel>("good", "wrong"));
    auth.enqueue(file("a", 1));
    auth.enqueue(file("b", 1));
    CHECK(auth.tick(s(60)).empty());
    CHECK(auth.pending() == 0);
    CHECK(auth.log().size() == 2);
    CHECK(auth.delivered_names().empty());
}
