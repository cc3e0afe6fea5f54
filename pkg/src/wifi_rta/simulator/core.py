"""Event loop of the MAC simulator.

The loop is compiled with numba; the same function runs unchanged as plain
Python through ``simulate.py_func``. Times are integer nanoseconds.

Pending events live in one slot per kind (at most one of each is ever
outstanding): the medium release event, the next RTA arrival, the next
PCA RTS generation, and the next backoff expiry, which is recomputed from
the frozen counters whenever the medium is idle. Equal times are resolved
in that order, so replay is deterministic.
"""

import numpy as np
from numba import njit

# event kinds; also the tie-break priority at equal times
TX_END = 0
ACK_TIMEOUT = 1
CF_END = 2
NAV_EXPIRY = 3
FRAME_ARRIVAL = 4
RTS_SCHEDULED = 5
BACKOFF_EXPIRY = 6
KIND_NAMES = ("TxEnd", "AckTimeoutFire", "CfEndSent", "NavExpiry", "FrameArrival",
              "RtsScheduled", "BackoffExpiry")

# trace detail codes
C_TX_SUCCESS = 1  # legacy TXOP starts; arg = end
C_TX_COLLISION = 2  # arg = end
C_TX_RTA_DATA = 3  # arg = end
C_TX_RTS = 4  # RTS/CTS exchange starts; arg = exchange end
C_TX_CFEND = 5  # arg = end
C_HOLD = 6  # reservation held idle; arg = NAV end
C_IDLE = 7  # medium released
C_ARRIVAL = 8  # arg = frame index
C_RTS_SKIPPED = 9
C_RTS_PENDING = 10
C_DELIVERED = 11  # RTA frame done; arg = delay
C_NAV_LOST = 12
CODE_NAMES = ("", "tx_success", "tx_collision", "tx_rta_data", "tx_rts", "tx_cfend",
              "hold", "idle", "arrival", "rts_skipped", "rts_pending", "delivered",
              "nav_lost")
TX_START_CODES = (C_TX_SUCCESS, C_TX_COLLISION, C_TX_RTA_DATA, C_TX_RTS, C_TX_CFEND)

# parameter vector layout
P_TE = 0
P_AIFS = 1
P_AIFS_RTA = 2
P_TS = 3
P_TC = 4
P_TSR = 5
P_TEXCH = 6
P_TCFEND = 7
P_TPAYLOAD = 8
P_TDATA = 9
P_TRTS = 10
P_ACKTO = 11
P_N = 12
P_RL = 13
P_CWRTA = 14
P_MODE = 15
P_TPERIOD = 16
P_SIGMA = 17
P_TB = 18
P_NAVHOLD = 19
P_NFRAMES = 20
P_DURATION = 21
P_TRUNC = 22
N_PARAMS = 23

MODE_NONE = 0
MODE_SIMPLE = 1
MODE_PCA = 2

# statistics vector layout
S_TOTAL = 0
S_EMPTY_TIME = 1
S_SUCC_TIME = 2
S_COLL_TIME = 3
S_RTA_TIME = 4
S_PAYLOAD_TIME = 5
S_N_SUCC = 6
S_N_COLL = 7
S_N_EMPTY_SLOTS = 8
S_N_RTA_TX = 9
S_RTA_COLL = 10
S_N_EVENTS = 11
S_N_TRACE = 12
S_ERR = 13
S_ERR_TIME = 14
S_RTA_AIRTIME = 15
S_N_RTS = 16
S_N_FRAMES = 17
S_N_MID_EXCHANGE = 18
S_N_RESERVED = 19
S_N_REPLACED = 20
S_N_ARRIVALS = 21
S_MAX_QUEUE = 22
N_STATS = 23

ERR_TIME = 1
ERR_NAV = 2
ERR_OVERLAP = 3
ERR_QUEUE = 4
ERR_NAMES = ("", "time went backwards", "legacy transmission under NAV",
             "transmission started on a busy medium", "RTA queue overflow")

# per-frame flags
F_IMMEDIATE = 1
F_RESERVED = 2
F_MID_EXCHANGE = 4
F_REPLACED_RTS = 8

# slot categories for time accounting
CAT_EMPTY = 0
CAT_SUCC = 1
CAT_COLL = 2
CAT_RTA = 3

# RTA reservation state
R_NONE = 0
R_CONTEND = 1
R_EXCHANGE = 2
R_HOLD = 3

INF = np.int64(2) ** 62
QCAP = 64


@njit(cache=True)
def _arrival_time(k, T_period, sigma, trunc):
    t = k * T_period
    if sigma > 0:
        while True:
            z = np.random.normal(0.0, 1.0)
            if abs(z) <= trunc:
                break
        t += np.int64(np.round(z * sigma))
    return t


@njit(cache=True)
def _rec(trace, n, t, kind, station, code, arg):
    """Append one trace row; the buffer keeps the most recent rows."""
    cap = trace.shape[0]
    if cap > 0:
        i = n % cap
        trace[i, 0] = t
        trace[i, 1] = kind
        trace[i, 2] = station
        trace[i, 3] = code
        trace[i, 4] = arg
    return n + 1


@njit(cache=True)
def simulate(P, cw, seed, delays, arrivals, flags, stats, trace):
    np.random.seed(seed)
    Te = P[P_TE]
    AIFS = P[P_AIFS]
    AIFS_RTA = P[P_AIFS_RTA]
    T_s = P[P_TS]
    T_c = P[P_TC]
    T_SR = P[P_TSR]
    T_exch = P[P_TEXCH]
    T_CFend = P[P_TCFEND]
    N = P[P_N]
    RL = P[P_RL]
    CW_RTA = P[P_CWRTA]
    mode = P[P_MODE]
    T_period = P[P_TPERIOD]
    sigma = P[P_SIGMA]
    T_b = P[P_TB]
    n_frames = P[P_NFRAMES]
    duration = P[P_DURATION]
    trunc = P[P_TRUNC]
    RTA = N  # station id of the RTA STA

    c = np.empty(N, np.int64)
    r = np.zeros(N, np.int64)
    txing = np.zeros(N, np.bool_)
    for i in range(N):
        c[i] = np.random.randint(0, cw[0])

    now = np.int64(0)
    busy = False
    t_med = INF
    med_kind = -1
    med_who = -1
    seg_start = np.int64(0)
    busy_cat = CAT_EMPTY
    idle_since = np.int64(0)
    prev_cat = CAT_EMPTY
    nav_until = np.int64(0)

    # RTA STA
    t_arr = INF
    k_arr = 1
    t_rts = INF
    k_rts = 1
    rts_skip = 0  # period whose RTS is cancelled because its data came first
    if mode != MODE_NONE:
        t_arr = _arrival_time(k_arr, T_period, sigma, trunc)
        if mode == MODE_PCA:
            t_rts = k_rts * T_period - T_b
    queue = np.empty(QCAP, np.int64)  # frame indices, FIFO
    q_head = 0
    q_n = 0
    rta_cont = False
    rta_cont_rts = False
    rta_b = 0
    rta_imm = False  # transmit at rta_imm_t without backoff
    rta_imm_t = INF
    rta_sending_data = False
    rsv = R_NONE
    reserved_tx = False
    frames_done = 0
    n_trace = 0
    n_events = 0
    err = 0

    while True:
        # -- next event ----------------------------------------------------
        t_leg = INF
        cmin = 0
        t_r = INF
        t_bo = INF
        if not busy:
            if N > 0:
                cmin = c[0]
                for i in range(1, N):
                    if c[i] < cmin:
                        cmin = c[i]
                t_leg = idle_since + AIFS + cmin * Te
            if rta_cont:
                if rta_imm:
                    t_r = rta_imm_t
                else:
                    t_r = idle_since + AIFS_RTA + rta_b * Te
            t_bo = t_leg if t_leg < t_r else t_r
        t = t_med
        kind = TX_END
        if t_arr < t:
            t = t_arr
            kind = FRAME_ARRIVAL
        if t_rts < t:
            t = t_rts
            kind = RTS_SCHEDULED
        if t_bo < t:
            t = t_bo
            kind = BACKOFF_EXPIRY

        if mode == MODE_NONE and t > duration:
            t = duration
            if busy:
                d = t - seg_start
                if busy_cat == CAT_SUCC:
                    stats[S_SUCC_TIME] += d
                elif busy_cat == CAT_COLL:
                    stats[S_COLL_TIME] += d
                else:
                    stats[S_RTA_TIME] += d
            else:
                idle = t - idle_since
                a = idle if idle < AIFS else AIFS
                if prev_cat == CAT_SUCC:
                    stats[S_SUCC_TIME] += a
                elif prev_cat == CAT_COLL:
                    stats[S_COLL_TIME] += a
                elif prev_cat == CAT_RTA:
                    stats[S_RTA_TIME] += a
                else:
                    stats[S_EMPTY_TIME] += a
                stats[S_EMPTY_TIME] += idle - a
                if idle > AIFS:
                    stats[S_N_EMPTY_SLOTS] += (idle - AIFS) // Te
            now = t
            break
        if t < now:
            err = ERR_TIME
            break
        now = t
        n_events += 1
        if kind == TX_END and busy:
            kind = med_kind

        start_rta = False  # RTA transmission begins at `now`
        if kind == BACKOFF_EXPIRY:
            # ---- contention resolves: who transmits at `now`?
            k_leg = 0
            if now >= idle_since + AIFS:
                k_leg = (now - idle_since - AIFS) // Te
            rta_tx = rta_cont and t_r == now
            ntx = 0
            winner = -1
            if N > 0 and t_leg == now and not (rta_tx and rta_imm):
                for i in range(N):
                    txing[i] = c[i] == cmin
                    if txing[i]:
                        ntx += 1
                        winner = i
                    c[i] -= cmin
            else:
                for i in range(N):
                    txing[i] = False
                    c[i] -= k_leg
            # the slot boundary ending the next AIFS counts as one backoff
            # slot for every frozen counter
            for i in range(N):
                if not txing[i] and c[i] > 0:
                    c[i] -= 1
            if rta_cont and not rta_tx and not rta_imm and now >= idle_since + AIFS_RTA:
                rta_b -= (now - idle_since - AIFS_RTA) // Te
            # close the idle interval
            idle = now - idle_since
            a = idle if idle < AIFS else AIFS
            if prev_cat == CAT_SUCC:
                stats[S_SUCC_TIME] += a
            elif prev_cat == CAT_COLL:
                stats[S_COLL_TIME] += a
            elif prev_cat == CAT_RTA:
                stats[S_RTA_TIME] += a
            else:
                stats[S_EMPTY_TIME] += a
            stats[S_EMPTY_TIME] += idle - a
            stats[S_N_EMPTY_SLOTS] += k_leg
            if ntx > 0 and nav_until > now:
                err = ERR_NAV
                break
            if ntx + (1 if rta_tx else 0) >= 2:
                dur = T_c
                if rta_tx:
                    own = P[P_TRTS] if rta_cont_rts else P[P_TDATA]
                    if own + P[P_ACKTO] > dur:
                        dur = own + P[P_ACKTO]
                    stats[S_RTA_COLL] += 1
                    rta_b = np.random.randint(0, CW_RTA)
                    rta_imm = False
                for i in range(N):
                    if txing[i]:
                        if r[i] >= RL:
                            r[i] = 0
                        else:
                            r[i] += 1
                        c[i] = np.random.randint(0, cw[r[i]])
                busy = True
                seg_start = now
                busy_cat = CAT_COLL
                t_med = now + dur
                med_kind = ACK_TIMEOUT
                med_who = -1
                n_trace = _rec(trace, n_trace, now, BACKOFF_EXPIRY, -1, C_TX_COLLISION, t_med)
            elif ntx == 1:
                r[winner] = 0
                c[winner] = np.random.randint(0, cw[0])
                busy = True
                seg_start = now
                busy_cat = CAT_SUCC
                t_med = now + T_s
                nav_until = t_med
                med_kind = TX_END
                med_who = winner
                n_trace = _rec(trace, n_trace, now, BACKOFF_EXPIRY, winner, C_TX_SUCCESS, t_med)
            else:
                start_rta = True

        elif kind == TX_END:
            d = now - seg_start
            if med_who >= 0 and med_who < N:
                stats[S_SUCC_TIME] += d
                stats[S_N_SUCC] += 1
                stats[S_PAYLOAD_TIME] += P[P_TPAYLOAD]
                busy = False
                idle_since = now
                prev_cat = CAT_SUCC
                t_med = INF
                n_trace = _rec(trace, n_trace, now, TX_END, med_who, C_IDLE, 0)
            elif rta_sending_data:
                # RTA data exchange complete
                stats[S_RTA_TIME] += d
                stats[S_RTA_AIRTIME] += d
                rta_sending_data = False
                f = queue[q_head]
                q_head = (q_head + 1) % QCAP
                q_n -= 1
                delays[f] = now - arrivals[f]
                frames_done += 1
                n_trace = _rec(trace, n_trace, now, TX_END, RTA, C_DELIVERED, delays[f])
                seg_start = now
                if reserved_tx:
                    reserved_tx = False
                    t_med = now + T_CFend
                    med_kind = CF_END
                    n_trace = _rec(trace, n_trace, now, TX_END, RTA, C_TX_CFEND, t_med)
                else:
                    busy = False
                    idle_since = now
                    prev_cat = CAT_RTA
                    t_med = INF
                    if q_n > 0:
                        rta_cont = True
                        rta_cont_rts = False
                        rta_imm = False
                        rta_b = np.random.randint(0, CW_RTA)
            else:
                # RTS/CTS exchange complete
                stats[S_RTA_TIME] += d
                stats[S_RTA_AIRTIME] += d
                seg_start = now
                if q_n > 0:
                    f = queue[q_head]
                    flags[f] |= F_RESERVED | F_MID_EXCHANGE
                    stats[S_N_MID_EXCHANGE] += 1
                    stats[S_N_RESERVED] += 1
                    rsv = R_NONE
                    reserved_tx = True
                    rta_sending_data = True
                    t_med = now + T_SR
                    med_kind = TX_END
                    stats[S_N_RTA_TX] += 1
                    n_trace = _rec(trace, n_trace, now, TX_END, RTA, C_TX_RTA_DATA, t_med)
                else:
                    rsv = R_HOLD
                    t_med = nav_until
                    med_kind = NAV_EXPIRY
                    n_trace = _rec(trace, n_trace, now, TX_END, RTA, C_HOLD, nav_until)

        elif kind == ACK_TIMEOUT:
            stats[S_COLL_TIME] += now - seg_start
            stats[S_N_COLL] += 1
            busy = False
            idle_since = now
            prev_cat = CAT_COLL
            t_med = INF
            n_trace = _rec(trace, n_trace, now, ACK_TIMEOUT, -1, C_IDLE, 0)

        elif kind == CF_END or kind == NAV_EXPIRY:
            d = now - seg_start
            stats[S_RTA_TIME] += d
            if kind == CF_END:
                stats[S_RTA_AIRTIME] += d
            nav_until = now
            rsv = R_NONE
            busy = False
            idle_since = now
            prev_cat = CAT_RTA
            t_med = INF
            n_trace = _rec(trace, n_trace, now, kind, RTA, C_IDLE if kind == CF_END else C_NAV_LOST, 0)
            if q_n > 0:
                rta_cont = True
                rta_cont_rts = False
                rta_imm = False
                rta_b = np.random.randint(0, CW_RTA)

        elif kind == FRAME_ARRIVAL:
            f = k_arr - 1
            k_arr += 1
            stats[S_N_ARRIVALS] += 1
            if f < n_frames:
                arrivals[f] = now
                t_arr = _arrival_time(k_arr, T_period, sigma, trunc)
            else:
                t_arr = INF
            if f < n_frames:
                if q_n >= QCAP:
                    err = ERR_QUEUE
                    break
                queue[(q_head + q_n) % QCAP] = f
                q_n += 1
                if q_n > stats[S_MAX_QUEUE]:
                    stats[S_MAX_QUEUE] = q_n
                n_trace = _rec(trace, n_trace, now, FRAME_ARRIVAL, RTA, C_ARRIVAL, f)
                if q_n == 1:
                    if rsv == R_HOLD:
                        # channel already held: send at once
                        d = now - seg_start
                        stats[S_RTA_TIME] += d
                        seg_start = now
                        rsv = R_NONE
                        flags[f] |= F_RESERVED
                        stats[S_N_RESERVED] += 1
                        reserved_tx = True
                        rta_sending_data = True
                        t_med = now + T_SR
                        med_kind = TX_END
                        stats[S_N_RTA_TX] += 1
                        n_trace = _rec(trace, n_trace, now, FRAME_ARRIVAL, RTA, C_TX_RTA_DATA, t_med)
                    elif rsv == R_CONTEND:
                        # data replaces the pending RTS, same backoff
                        rsv = R_NONE
                        rta_cont_rts = False
                        flags[f] |= F_REPLACED_RTS
                        stats[S_N_REPLACED] += 1
                    elif rsv == R_EXCHANGE:
                        pass  # served when the exchange completes
                    else:
                        if mode == MODE_PCA and k_rts == f + 1:
                            rts_skip = f + 1
                        if not busy and now - idle_since >= AIFS_RTA:
                            rta_imm = True
                            rta_imm_t = now
                            flags[f] |= F_IMMEDIATE
                        else:
                            rta_imm = False
                            rta_b = np.random.randint(0, CW_RTA)
                        rta_cont = True
                        rta_cont_rts = False

        elif kind == RTS_SCHEDULED:
            kr = k_rts
            k_rts += 1
            t_rts = k_rts * T_period - T_b
            if kr > n_frames:
                t_rts = INF
            elif rts_skip == kr or q_n > 0:
                n_trace = _rec(trace, n_trace, now, RTS_SCHEDULED, RTA, C_RTS_SKIPPED, kr)
            else:
                rsv = R_CONTEND
                rta_cont = True
                rta_cont_rts = True
                if not busy and now - idle_since >= AIFS_RTA:
                    rta_imm = True
                    rta_imm_t = now
                else:
                    rta_imm = False
                    rta_b = np.random.randint(0, CW_RTA)
                n_trace = _rec(trace, n_trace, now, RTS_SCHEDULED, RTA, C_RTS_PENDING, kr)

        if start_rta:
            if busy:
                err = ERR_OVERLAP
                break
            rta_cont = False
            rta_imm = False
            busy = True
            seg_start = now
            busy_cat = CAT_RTA
            med_who = RTA
            med_kind = TX_END
            if rta_cont_rts:
                rsv = R_EXCHANGE
                t_med = now + T_exch
                nav_until = t_med + P[P_NAVHOLD]
                stats[S_N_RTS] += 1
                code = C_TX_RTS
            else:
                rta_sending_data = True
                reserved_tx = False
                t_med = now + T_SR
                stats[S_N_RTA_TX] += 1
                code = C_TX_RTA_DATA
            rta_imm_t = INF
            n_trace = _rec(trace, n_trace, now, BACKOFF_EXPIRY, RTA, code, t_med)

        if mode != MODE_NONE and frames_done >= n_frames and not busy:
            break

    stats[S_TOTAL] = now
    stats[S_N_EVENTS] = n_events
    stats[S_N_TRACE] = n_trace
    stats[S_N_FRAMES] = frames_done
    stats[S_ERR] = err
    stats[S_ERR_TIME] = now
    return err
