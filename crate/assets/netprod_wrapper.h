/*
 * netprod_wrapper.h: declarations expected by generated dispatch code.
 *
 * This contract is a reconstruction; no reference wrapper is published with it.
 * A conforming wrapper:
 *   - runs on a single core and processes one frame at a time;
 *   - for each received frame, sets np_in, np_port and np_time, clears
 *     np_egress_mask and calls np_step once from the ingress-ready state;
 *   - then sets np_time to the egress time and, for every port p in
 *     1..NP_NUM_PORTS, sets np_self = p and calls np_step from the resulting
 *     state; every call must return the same next state;
 *   - transmits *np_out on each port whose bit is set in np_egress_mask and
 *     never on any other interface, so loc is always a subset of egress;
 *   - never modifies np_mlt between a frame's ingress and egress steps.
 */
#ifndef NETPROD_WRAPPER_H
#define NETPROD_WRAPPER_H

#include <stdbool.h>
#include <stdint.h>

#ifndef NP_NUM_PORTS
#define NP_NUM_PORTS 4
#endif
#ifndef NP_MLT_SIZE
#define NP_MLT_SIZE 4
#endif

struct ether_addr {
    uint8_t addr_bytes[6];
};

struct np_frame {
    struct ether_addr da;
    struct ether_addr sa;
    uint16_t proto;
};

struct np_mlt_entry {
    struct ether_addr mac;
    int64_t t;
    uint32_t port;
};

/* Current ingress frame (the snapshot x.f during egress steps) and output frame. */
extern const struct np_frame *np_in;
extern struct np_frame *np_out;
/* Ingress port of np_in, the instance port, and the uplink port. */
extern uint32_t np_port;
extern uint32_t np_self;
extern uint32_t np_uplink;
/* Current time and MAC table timeout. */
extern int64_t np_time;
extern int64_t np_mto;
extern struct np_mlt_entry np_mlt[NP_MLT_SIZE];
/* Bit p set means transmit on port p. */
extern uint32_t np_egress_mask;

static inline bool is_unicast_ether_addr(const struct ether_addr *a)
{
    return (a->addr_bytes[0] & 0x01) == 0;
}

static inline bool is_broadcast_ether_addr(const struct ether_addr *a)
{
    for (int i = 0; i < 6; i++)
        if (a->addr_bytes[i] != 0xff)
            return false;
    return true;
}

static inline bool np_mac_eq(const struct ether_addr *a, const struct ether_addr *b)
{
    for (int i = 0; i < 6; i++)
        if (a->addr_bytes[i] != b->addr_bytes[i])
            return false;
    return true;
}

/* Hardware address of a switch port. */
const struct ether_addr *np_haddr(uint32_t port);
/* Whether the frame is an ARP request for the address of the given port. */
bool np_arp_reqrx(const struct np_frame *f, uint32_t port);
/* Stores (sa, t, port) in the slot holding sa, else the lowest expired slot. */
void np_mlt_learn(const struct ether_addr *sa, int64_t t, uint32_t port);

/* True iff cond holds for some table index; binds the index to var. */
#define NP_MLT_ANY(var, cond) \
    ({ bool np_any_ = false; \
       for (int var = 0; var < NP_MLT_SIZE && !np_any_; var++) \
           np_any_ = (cond); \
       np_any_; })

#endif
