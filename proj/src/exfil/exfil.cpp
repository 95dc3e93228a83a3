#include "sbcsim/exfil/exfil.hpp"

#include <algorithm>

namespace sbcsim::exfil {

std::string_view to_string(Outcome o) {
    switch (o) {
        case Outcome::Delivered: return "delivered";
        case Outcome::RetryableFailure: return "retryable-failure";
        case Outcome::AuthFailure: return "auth-failure";
    }
    return "?";
}

Bytes EmailMessage::render(const std::string& recipient) const {
    std::string head = "To: " + recipient + "\r\nX-Exfil-File: " + file + "\r\nX-Exfil-Chunk: " +
                       std::to_string(index) + "/" + std::to_string(count) +
                       "\r\nContent-Length: " + std::to_string(body.size()) + "\r\n\r\n";
    Bytes out = to_bytes(head);
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

std::vector<EmailMessage> EmailChannel::split(const ExfilFile& file) const {
    const std::size_t n = file.bytes.empty() ? 1 : (file.bytes.size() + size_cap_ - 1) / size_cap_;
    std::vector<EmailMessage> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t from = i * size_cap_;
        const std::size_t to = std::min(file.bytes.size(), from + size_cap_);
        out.push_back(EmailMessage{file.name, i + 1, n,
                                   Bytes(file.bytes.begin() + static_cast<std::ptrdiff_t>(from),
                                         file.bytes.begin() + static_cast<std::ptrdiff_t>(to))});
    }
    return out;
}

Outcome EmailChannel::deliver(const ExfilFile& file) {
    if (!available) return Outcome::RetryableFailure;
    for (auto& m : split(file)) outbox_.push_back(std::move(m));
    return Outcome::Delivered;
}

Bytes EmailChannel::wire_payload(const ExfilFile& file) const {
    Bytes out;
    for (const auto& m : split(file)) {
        const Bytes r = m.render(recipient_);
        out.insert(out.end(), r.begin(), r.end());
    }
    return out;
}

std::optional<Bytes> EmailChannel::reassemble(const std::string& file) const {
    std::vector<const EmailMessage*> parts;
    for (const auto& m : outbox_)
        if (m.file == file) parts.push_back(&m);
    if (parts.empty()) return std::nullopt;
    std::sort(parts.begin(), parts.end(), [](auto* a, auto* b) { return a->index < b->index; });
    const std::size_t count = parts.front()->count;
    if (parts.size() != count) return std::nullopt;
    Bytes out;
    for (std::size_t i = 0; i < count; ++i) {
        if (parts[i]->index != i + 1) return std::nullopt;
        out.insert(out.end(), parts[i]->body.begin(), parts[i]->body.end());
    }
    return out;
}

Outcome CloudChannel::upload(const std::string& token, const ExfilFile& file) {
    if (!available) return Outcome::RetryableFailure;
    if (token != valid_token_) return Outcome::AuthFailure;
    std::string key = file.name;
    for (int n = 1; store_.count(key); ++n) key = file.name + "-dup" + std::to_string(n);
    store_.emplace(key, file.bytes);
    order_.push_back(key);
    return Outcome::Delivered;
}

Bytes CloudChannel::wire_payload(const ExfilFile& file) const {
    Bytes out = to_bytes("PUT /" + file.name + " HTTP/1.0\r\nAuthorization: Bearer " + presented_token_ +
                              "\r\nContent-Length: " + std::to_string(file.bytes.size()) + "\r\n\r\n");
    out.insert(out.end(), file.bytes.begin(), file.bytes.end());
    return out;
}

ExfilScheduler::ExfilScheduler(SchedulerConfig cfg, std::unique_ptr<Channel> channel)
    : cfg_(std::move(cfg)), channel_(std::move(channel)) {}

bool ExfilScheduler::in_outage(SimTime t) const {
    return std::any_of(cfg_.outages.begin(), cfg_.outages.end(),
                       [t](const Outage& o) { return t >= o.from && t < o.to; });
}

std::vector<ExfilFile> ExfilScheduler::tick(SimTime now) {
    std::vector<ExfilFile> delivered;
    channel_->available = !in_outage(now);
    while (!pending_.empty()) {
        auto& head = pending_.front();
        if (head.eligible_at > now) break;
        ++head.attempts;
        const Outcome o = channel_->deliver(head.file);
        DeliveryLog entry{head.file.name, now, DeliveryResult{o, head.attempts}};
        if (o == Outcome::Delivered) {
            log_.push_back(entry);
            delivered.push_back(std::move(head.file));
            pending_.pop_front();
            continue;
        }
        if (o == Outcome::AuthFailure || head.attempts >= cfg_.retry.max_attempts) {
            log_.push_back(entry);
            pending_.pop_front();
            continue;
        }
        head.eligible_at = now + backoff();
        break;
    }
    return delivered;
}

std::optional<SimTime> ExfilScheduler::next_retry() const {
    if (pending_.empty() || pending_.front().attempts == 0) return std::nullopt;
    return pending_.front().eligible_at;
}

std::vector<std::string> ExfilScheduler::delivered_names() const {
    std::vector<std::string> out;
    for (const auto& l : log_)
        if (l.result.outcome == Outcome::Delivered) out.push_back(l.name);
    return out;
}

}  // namespace sbcsim::exfil
