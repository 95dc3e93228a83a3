#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sbcsim/net/bytes.hpp"
#include "sbcsim/net/time.hpp"

namespace sbcsim::exfil {


enum class Outcome { Delivered, RetryableFailure, AuthFailure };
std::string_view to_string(Outcome o);

struct DeliveryResult {
    Outcome outcome = Outcome::Delivered;
    int attempts = 0;
};

/// Half-open [from, to) interval during which a channel is unreachable.
struct Outage {
    SimTime from;
    SimTime to;
};

struct ExfilFile {
    std::string name;
    Bytes bytes;
};

class Channel {
public:
    virtual ~Channel() = default;
    virtual std::string kind() const = 0;
    /// One attempt; does not touch the attempt counter.
    virtual Outcome deliver(const ExfilFile& file) = 0;
    /// Application bytes carried to the sink host for a delivered file.
    virtual Bytes wire_payload(const ExfilFile& file) const = 0;
    virtual std::uint16_t sink_port() const = 0;

    bool available = true;
};

struct EmailMessage {
    std::string file;
    std::size_t index = 1;  // 1-based
    std::size_t count = 1;
    Bytes body;
    /// Header block followed by the body.
    Bytes render(const std::string& recipient) const;
};

class EmailChannel : public Channel {
public:
    static constexpr std::size_t kDefaultSizeCap = 25u << 20;

    explicit EmailChannel(std::string recipient, std::size_t size_cap = kDefaultSizeCap)
        : recipient_(std::move(recipient)), size_cap_(size_cap) {}

    std::string kind() const override { return "email"; }
    Outcome deliver(const ExfilFile& file) override;
    Bytes wire_payload(const ExfilFile& file) const override;
    std::uint16_t sink_port() const override { return 25; }

    /// Splits into ceil(size / size_cap) bodies; an empty file is one empty message.
    std::vector<EmailMessage> split(const ExfilFile& file) const;
    /// Concatenates the outbox chunks of `file` in index order.
    std::optional<Bytes> reassemble(const std::string& file) const;

    const std::string& recipient() const { return recipient_; }
    std::size_t size_cap() const { return size_cap_; }
    const std::vector<EmailMessage>& outbox() const { return outbox_; }

private:
    std::string recipient_;
    std::size_t size_cap_;
    std::vector<EmailMessage> outbox_;
};

class CloudChannel : public Channel {
public:
    CloudChannel(std::string valid_token, std::string presented_token)
        : valid_token_(std::move(valid_token)), presented_token_(std::move(presented_token)) {}

    std::string kind() const override { return "cloud"; }
    Outcome deliver(const ExfilFile& file) override { return upload(presented_token_, file); }
    Bytes wire_payload(const ExfilFile& file) const override;
    std::uint16_t sink_port() const override { return 443; }

    /// Stores under `name`, or `name-dupN` with the smallest free N on collision.
    Outcome upload(const std::string& token, const ExfilFile& file);

    const std::map<std::string, Bytes>& store() const { return store_; }
    /// Store keys in upload order.
    const std::vector<std::string>& upload_order() const { return order_; }

private:
    std::string valid_token_;
    std::string presented_token_;
    std::map<std::string, Bytes> store_;
    std::vector<std::string> order_;
};

struct RetryPolicy {
    int max_attempts = 5;
    // Unset means "the scheduler interval".
    std::optional<SimDuration> backoff;
};

struct SchedulerConfig {
    SimDuration interval = SimTime::from_seconds(60);
    RetryPolicy retry;
    std::vector<Outage> outages;
};

struct DeliveryLog {
    std::string name;
    SimTime time;
    DeliveryResult result;
};

/// FIFO of closed capture files delivered in order through one channel.
class ExfilScheduler {
public:
    ExfilScheduler(SchedulerConfig cfg, std::unique_ptr<Channel> channel);

    void enqueue(ExfilFile file) { pending_.push_back(Pending{std::move(file), 0, {}}); }

    /// Attempts the queue head-first. A retryable failure stops the pass so later
    /// files never overtake; AuthFailure and exhausted retries drop the file.
    /// Returns the files delivered in this pass, in order.
    std::vector<ExfilFile> tick(SimTime now);

    /// Earliest time a blocked head becomes eligible again, if any.
    std::optional<SimTime> next_retry() const;

    SimDuration backoff() const { return cfg_.retry.backoff.value_or(cfg_.interval); }
    const SchedulerConfig& config() const { return cfg_; }
    Channel& channel() { return *channel_; }
    const Channel& channel() const { return *channel_; }
    std::size_t pending() const { return pending_.size(); }
    const std::vector<DeliveryLog>& log() const { return log_; }
    std::vector<std::string> delivered_names() const;

private:
    struct Pending {
        ExfilFile file;
        int attempts = 0;
        SimTime eligible_at;
    };
    bool in_outage(SimTime t) const;

    SchedulerConfig cfg_;
    std::unique_ptr<Channel> channel_;
    std::deque<Pending> pending_;
    std::vector<DeliveryLog> log_;
};

}  // namespace sbcsim::exfil
