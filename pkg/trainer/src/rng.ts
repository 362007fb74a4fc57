/** Deterministic RNG (splitmix64-seeded xoshiro-style mix) for reproducible runs. */

export class Rng {
  private s: bigint;

  constructor(seed: number) {
    this.s = BigInt.asUintN(64, BigInt(Math.floor(seed)) + 0x9e3779b97f4a7c15n);
  }

  /** uniform in [0, 1) */
  next(): number {
    this.s = BigInt.asUintN(64, this.s + 0x9e3779b97f4a7c15n);
    let z = this.s;
    z = BigInt.asUintN(64, (z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n);
    z = BigInt.asUintN(64, (z ^ (z >> 27n)) * 0x94d049bb133111ebn);
    z = z ^ (z >> 31n);
    return Number(z >> 11n) / 9007199254740992; // 53-bit mantissa
  }

  uniform(lo: number, hi: number): number {
    return lo + (hi - lo) * this.next();
  }

  /** standard normal via Box-Muller */
  normal(): number {
    let u = 0;
    while (u === 0) u = this.next();
    const v = this.next();
    return Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * v);
  }
}
