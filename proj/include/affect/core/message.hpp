#pragma once

#include <memory>
#include <utility>

#include "affect/core/time.hpp"

namespace affect {

/// A payload tagged with the capture time of the sensor data it derives
/// from. Payloads are shared immutably so fan-out never copies frames.
template <class T>
class Message {
public:
  Message(std::shared_ptr<const T> payload, Timestamp originating_time)
      : payload_(std::move(payload)), time_(originating_time) {}
  Message(T payload, Timestamp originating_time)
      : payload_(std::make_shared<const T>(std::move(payload))), time_(originating_time) {}

  const T& payload() const { return *payload_; }
  const T* operator->() const { return payload_.get(); }
  const std::shared_ptr<const T>& shared() const { return payload_; }
  Timestamp originating_time() const { return time_; }

private:
  std::shared_ptr<const T> payload_;
  Timestamp time_;
};

}  // namespace affect
